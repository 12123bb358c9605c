"""fabhal: solver-aided design of rigid fixture hacks from everyday objects."""

from fabhal.frames import Frame, frame_compose, frame_inverse

__version__ = "0.1.0"

__all__ = ["Frame", "frame_compose", "frame_inverse", "__version__"]
