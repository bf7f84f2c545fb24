"""solspace: engine for exploring and narrowing generative-design solution spaces.

The engine clusters design solutions by quantitative metrics and shape
features, lays them out in a navigable 3D scene, and iteratively shrinks
the space from user-selected seed solutions.
"""

__version__ = "0.1.0"
