"""Coverings of convex bodies by Macbeath regions, with polytope approximation and norm-CVP."""
from .bodies import (AffineImage, ConvexBody, Ellipsoid, HPolytope, Hyperplane, LpBall,
                     OracleConfig, PolarBody, VPolytope)

__all__ = ["AffineImage", "ConvexBody", "Ellipsoid", "HPolytope", "Hyperplane", "LpBall",
           "OracleConfig", "PolarBody", "VPolytope"]
__version__ = "0.1.0"
