"""LiDAR-camera fusion for lane line segmentation."""

__version__ = "0.1.0"
