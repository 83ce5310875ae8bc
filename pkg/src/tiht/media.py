"""PNG images and frame directories as tensors with entries in [0, 1]."""

import os
import re

import numpy as np
from PIL import Image

__all__ = [
    "load_image_tensor",
    "save_image_tensor",
    "load_video_tensor",
    "save_video_frames",
    "quantize",
]

# Rec. 601 luma
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def quantize(X):
    """Clamp to [0, 1] and round to 8-bit levels."""
    return np.round(255.0 * np.clip(X, 0.0, 1.0)).astype(np.uint8)


def load_image_tensor(path):
    """Read an 8-bit RGB image as a ``(rows, cols, 3)`` tensor of ``byte / 255``."""
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if img.mode != "RGB":
        raise ValueError(f"{path}: expected an 8-bit RGB image, got mode {img.mode}")
    return np.asarray(img, dtype=np.float64) / 255.0


def save_image_tensor(X, path):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != 3:
        raise ValueError(f"expected a (rows, cols, 3) tensor, got {X.shape}")
    Image.fromarray(quantize(X), mode="RGB").save(path)


def _natural_key(name):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def load_video_tensor(directory):
    """Stack the PNG frames of `directory` into a ``(rows, cols, frames)`` tensor.

    Frames are ordered by file name with digit runs compared numerically.
    RGB frames are converted to grayscale with Rec. 601 luma weights.
    """
    names = sorted((n for n in os.listdir(directory) if n.lower().endswith(".png")), key=_natural_key)
    if not names:
        raise ValueError(f"no PNG frames in {directory}")
    frames = []
    for name in names:
        path = os.path.join(directory, name)
        img = Image.open(path)
        if img.mode == "L":
            frame = np.asarray(img, dtype=np.float64) / 255.0
        elif img.mode == "RGB":
            frame = (np.asarray(img, dtype=np.float64) / 255.0) @ LUMA_WEIGHTS
        else:
            raise ValueError(f"{path}: expected an 8-bit grayscale or RGB frame, got mode {img.mode}")
        if frames and frame.shape != frames[0].shape:
            raise ValueError(f"{path}: frame size {frame.shape} differs from {frames[0].shape}")
        frames.append(frame)
    return np.stack(frames, axis=2)


def save_video_frames(X, directory, pattern="recon_frame_{:03d}.png"):
    """Write each frontal slice ``X[:, :, k]`` as a grayscale PNG; returns the paths."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise ValueError(f"expected a (rows, cols, frames) tensor, got {X.shape}")
    os.makedirs(directory, exist_ok=True)
    paths = []
    for k in range(X.shape[2]):
        path = os.path.join(directory, pattern.format(k))
        Image.fromarray(quantize(X[:, :, k]), mode="L").save(path)
        paths.append(path)
    return paths
