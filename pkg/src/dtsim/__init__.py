"""Dynamic targeting: lookahead imaging, onboard analysis and deadline-constrained repointing."""

from .geometry import GroundFootprint, LookaheadGeometry, OrbitConfig, flat_earth_lead_time, footprint_at, lead_time
from .scene import EndmemberLibrary, SceneRaster, SyntheticScene, read_raster, write_raster
from .executor import CycleConfig, PhaseBudget, SpacecraftAgility, plan_cycle, run_cycle, slew_time
from .config import MissionConfig, load_config
from .mission import MissionMetrics, report, run_mission

__version__ = "0.1.0"
