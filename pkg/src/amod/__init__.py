"""Artificial modalities (rank pooling, optical flow) for face liveness detection."""
__version__ = "0.1.0"
