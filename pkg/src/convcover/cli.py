"""
Command-line front end.

Exit codes: 0 success, 1 a certificate check failed, 2 bad input.  All
randomness derives from --seed, so equal arguments give byte-identical JSON.
"""
import logging
import math
import sys

import click
import numpy as np

from . import __version__
from .approx import banach_mazur_polytope, verify_sandwich
from .bodies import body_from_json
from .enumerate import EnumeratorConfig, enumerate_cover, scaling_experiment
from .errors import InputError, PreconditionError, UnsupportedRepresentationError, VerificationError
from .lattice import CvpInstance, Lattice, approx_cvp, approx_ip, build_norm_cover, exact_cvp
from .macbeath import MacbeathRegion, verify_covering
from .serialize import covering_from_json, covering_to_json, dumps, loads

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _read_json(path):
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc.strerror)) from None


def _emit(obj, out):
    text = dumps(obj)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _config(c, a, log_factor):
    return EnumeratorConfig(c=c, A=a, log_factor=log_factor)


def _run(fn):
    """Map library errors onto exit codes."""
    try:
        code = fn()
    except VerificationError as exc:
        click.echo("verification failed: %s" % exc, err=True)
        if exc.report is not None:
            click.echo(dumps(exc.report), err=True, nl=False)
        sys.exit(EXIT_FAIL)
    except (InputError, PreconditionError, UnsupportedRepresentationError) as exc:
        click.echo("input error: %s" % exc, err=True)
        sys.exit(EXIT_INPUT)
    sys.exit(code or EXIT_OK)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Debug logging on stderr.")
def main(verbose):
    """Macbeath-region coverings, polytope approximation and approximate CVP."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)


def _common(f):
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--threads", type=int, default=1, show_default=True,
                     help="Accepted for interface stability; work runs in one process.")(f)
    return f


# --- cover ----------------------------------------------------------------------

@main.command()
@click.option("--body", "body_path", required=True, type=click.Path(dir_okay=False))
@click.option("--eps", type=float, required=True)
@click.option("--c", "c", type=float, default=2.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--svg", type=click.Path(dir_okay=False), help="Plot for n = 2.")
@click.option("--samples", type=int, default=20000, show_default=True, help="Coverage samples.")
@click.option("--A", "a", type=float, default=None, help="Sample multiplier (default 8 * 2^n).")
@click.option("--log-factor/--no-log-factor", default=True, show_default=True)
@_common
def cover(body_path, eps, c, out, svg, samples, a, log_factor, seed, threads):
    """Build and verify a (c, eps)-covering of a body."""
    def go():
        body = body_from_json(_read_json(body_path))
        rng = np.random.default_rng(seed)
        cov = enumerate_cover(body, eps, _config(c, a, log_factor), rng)
        rep = verify_covering(cov, rng, samples)
        _emit(covering_to_json(cov), out)
        if svg:
            if body.dim != 2:
                raise InputError("--svg needs n = 2")
            with open(svg, "w") as fh:
                fh.write(covering_svg(cov))
        if not rep["pass"]:
            click.echo("covering failed: %s" % ", ".join(rep["failed"]), err=True)
            return EXIT_FAIL
        return EXIT_OK
    _run(go)


@main.command()
@click.option("--cover", "cover_path", required=True, type=click.Path(dir_okay=False))
@click.option("--samples", type=int, default=100000, show_default=True)
@click.option("--threshold", type=float, default=0.999, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_common
def verify(cover_path, samples, threshold, out, seed, threads):
    """Re-check coverage and buffering of a covering file."""
    def go():
        cov = covering_from_json(_read_json(cover_path))
        rep = verify_covering(cov, np.random.default_rng(seed), samples, threshold)
        _emit(rep, out)
        if not rep["pass"]:
            click.echo("failed: %s" % ", ".join(rep["failed"]), err=True)
            return EXIT_FAIL
        return EXIT_OK
    _run(go)


@main.command()
@click.option("--body", "body_path", required=True, type=click.Path(dir_okay=False))
@click.option("--eps", type=float, required=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--samples", type=int, default=100000, show_default=True, help="Coverage samples.")
@_common
def approx(body_path, eps, out, samples, seed, threads):
    """Polytope P with K inside P inside (1 + eps) K."""
    def go():
        body = body_from_json(_read_json(body_path))
        rng = np.random.default_rng(seed)
        P = banach_mazur_polytope(body, eps, rng=rng, verify_samples=samples)
        rep = verify_sandwich(body, P, eps, rng)
        _emit({"eps": eps, "polytope": P.to_json(), "report": rep}, out)
        return EXIT_OK if rep["pass"] else EXIT_FAIL
    _run(go)


# --- lattices -------------------------------------------------------------------

def _matrix(spec):
    M = spec["basis"] if isinstance(spec, dict) else spec
    try:
        return np.array([[float(v) for v in row] for row in M], dtype=float)
    except (TypeError, ValueError):
        raise InputError("basis must be a matrix of reals") from None


@main.command()
@click.option("--instance", "inst_path", required=True, type=click.Path(dir_okay=False))
@click.option("--exact/--no-exact", default=True, show_default=True, help="Also report the exact distance.")
@click.option("--out", type=click.Path(dir_okay=False))
@_common
def cvp(inst_path, exact, out, seed, threads):
    """(1 + eps)-approximate closest vector.  Instance: {basis (columns), target, norm, eps}."""
    def go():
        spec = _read_json(inst_path)
        try:
            L = Lattice(_matrix(spec))
            inst = CvpInstance(L, [float(v) for v in spec["target"]], body_from_json(spec["norm"]),
                               float(spec.get("eps", 0.1)))
        except KeyError as exc:
            raise InputError("instance misses %s" % exc) from None
        rng = np.random.default_rng(seed)
        cov = build_norm_cover(inst.norm_body, inst.eps / 7.0, rng) if inst.eps <= 1 else None
        v, d, trace = approx_cvp(inst, cover=cov, rng=rng, return_trace=True)
        ans = {"point": v, "coefficients": np.round(L.coefficients(v)), "distance": d,
               "eps": inst.eps, "search_steps": trace["steps"], "babai_distance": trace["upper"],
               "covering": {"elements": len(cov) if cov is not None else 0, "eps": inst.eps / 7.0}}
        code = EXIT_OK
        if exact:
            _, dstar = exact_cvp(inst)
            ans["exact_distance"] = dstar
            ans["within_factor"] = bool(d <= (1 + inst.eps) * dstar + 1e-12)
            code = EXIT_OK if ans["within_factor"] else EXIT_FAIL
        _emit(ans, out)
        return code
    _run(go)


@main.command()
@click.option("--body", "body_path", required=True, type=click.Path(dir_okay=False))
@click.option("--basis", "basis_path", required=True, type=click.Path(dir_okay=False))
@click.option("--eps", type=float, required=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_common
def ip(body_path, basis_path, eps, out, seed, threads):
    """Approximate integer programming: a lattice point in the (1 + eps)-expansion, or Empty."""
    def go():
        body = body_from_json(_read_json(body_path))
        L = Lattice(_matrix(_read_json(basis_path)))
        ans = approx_ip(body, L, eps, np.random.default_rng(seed))
        _emit(ans.to_json(), out)
        return EXIT_OK
    _run(go)


@main.command()
@click.option("--body", "body_path", required=True, type=click.Path(dir_okay=False))
@click.option("--eps-list", required=True, help="Comma-separated, strictly decreasing.")
@click.option("--c", "c", type=float, default=2.0, show_default=True)
@click.option("--samples", type=int, default=100000, show_default=True)
@click.option("--A", "a", type=float, default=None)
@click.option("--log-factor/--no-log-factor", default=True, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_common
def scale(body_path, eps_list, c, samples, a, log_factor, out, seed, threads):
    """Covering size against eps with the fitted log-log slope."""
    def go():
        try:
            eps = [float(e) for e in eps_list.split(",") if e.strip()]
        except ValueError:
            raise InputError("bad --eps-list") from None
        body = body_from_json(_read_json(body_path))
        res = scaling_experiment(body, eps, _config(c, a, log_factor), np.random.default_rng(seed), samples)
        _emit(res, out)
        return EXIT_OK
    _run(go)


@main.command()
@click.option("--suite", type=click.Choice(["all", "bodies", "caps", "macbeath", "mahler"]), default="all",
              show_default=True)
@click.option("--trials", type=int, default=500, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="JSON results (timings omitted).")
@_common
def lemmas(suite, trials, out, seed, threads):
    """Run the geometric property suites and print a pass/fail table."""
    from .lemmas import run_suite

    def go():
        if trials < 1:
            raise InputError("--trials must be positive")
        results = run_suite(suite, trials, seed)
        width = max(len(r.name) for r in results)
        for r in results:
            click.echo("%-*s  %-4s  trials=%-5d violations=%-3d worst_margin=%-10.3g %6.1fs  %s" % (
                width, r.name, "PASS" if r.passed else "FAIL", r.trials, r.violations,
                r.worst_margin, r.seconds, r.method))
        if out:
            rows = []
            for r in results:
                row = r.to_json()
                row.pop("seconds")
                rows.append(row)
            _emit({"suite": suite, "trials": trials, "seed": seed, "results": rows}, out)
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    _run(go)


# --- SVG ------------------------------------------------------------------------

def _outline(points, center):
    a = np.arctan2(points[:, 1] - center[1], points[:, 0] - center[0])
    return points[np.argsort(a, kind="stable")]


def _body_outline(body, count=256):
    if hasattr(body, "vertices") and body.dim == 2:
        try:
            V = np.asarray(body.vertices)
            return _outline(V, V.mean(axis=0))
        except Exception:
            pass
    t = 2 * math.pi * np.arange(count) / count
    D = np.column_stack([np.cos(t), np.sin(t)])
    return D / body.gauge(D)[:, None]


def _region_outline(region):
    P = region.vertices() if region._poly is not None else region.boundary_points(48)
    return _outline(P, region.center)


def covering_svg(cov, size=1000):
    """Closed paths: one per element, then the body and its (1 + eps) expansion."""
    R = float(cov.ambient.r_outer)
    s = 0.45 * size / R

    def path(P, style):
        pts = ["%.3f,%.3f" % (size / 2 + s * x, size / 2 - s * y) for x, y in P]
        return '<path d="M %s Z" %s/>' % (" L ".join(pts), style)

    out = ['<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 %d %d" width="%d" height="%d">'
           % (size, size, size, size)]
    for e in cov.elements:
        m = MacbeathRegion(cov.ambient, e.center, e.scale)
        out.append(path(_region_outline(m), 'fill="none" stroke="#3060c0" stroke-width="0.4"'))
    out.append(path(_body_outline(cov.target), 'fill="none" stroke="black" stroke-width="2"'))
    out.append(path(_body_outline(cov.ambient), 'fill="none" stroke="#c03030" stroke-width="1" '
                                                'stroke-dasharray="6,4"'))
    out.append("</svg>")
    return "\n".join(out) + "\n"


if __name__ == "__main__":
    main()
