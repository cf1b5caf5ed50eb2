"""Hand-built scenes with known cloud layout."""

import numpy as np

from dtsim.scene import SceneRaster, render_cloud_scene


def striped_cloud_scene(clear_cols, width=160, height=32, gsd_km=0.5, seed=3):
    """Scene that is overcast except for the column slice ``clear_cols``."""
    opacity = np.ones((1, height, width))
    opacity[0, :, clear_cols] = 0.0
    field = SceneRaster(opacity, gsd_km, (0.0, -width * gsd_km / 2))
    return render_cloud_scene(field, seed)


def uniform_cloud_scene(opacity, width=160, height=32, gsd_km=0.5, seed=3):
    field = SceneRaster(np.full((1, height, width), opacity), gsd_km, (0.0, -width * gsd_km / 2))
    return render_cloud_scene(field, seed)
