"""Gait cycle segmentation and Fourier gait signatures from body-worn IMU data."""

__version__ = "1.0.0"

SCHEMA = "gaitsig/v1"
