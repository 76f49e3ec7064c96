"""Physics-informed vessel trajectory prediction toolkit."""

from .geodesy import (
    DEG2RAD,
    EARTH,
    EARTH_RADIUS_M,
    RAD2DEG,
    EarthModel,
    GeoPoint,
    angular_distance,
    haversine_m,
    initial_bearing_deg,
    wrap_course,
)
from .kinematics import (
    Approx,
    Displacement,
    HorizonMode,
    Integrator,
    KinematicState,
    Scheme,
    dead_reckon,
    displacement_great_circle,
    displacement_heun,
    displacement_small_angle,
    expected_displacements,
    midpoint_course_rad,
    state_derivative,
)
from .losses import (
    PhysicsConfig,
    PhysicsOrder,
    PredictionBatch,
    data_loss,
    physics_loss,
    physics_residuals,
    predicted_displacements,
    total_loss,
)
from .metrics import MetricsReport, ade_fde, evaluate_windows, mae_mse
from .model import (
    Arch,
    EpochStats,
    ModelParams,
    TrainConfig,
    forward,
    init_params,
    load_model,
    loss_and_grad,
    predict_denorm,
    save_model,
    train,
)
from .pipeline import (
    AisRecord,
    NormStats,
    SplitDataset,
    TrajectoryPoint,
    WindowPair,
    clean,
    derive_kinematics,
    hermite_resample,
    load_dataset,
    make_windows,
    parse_ais_csv,
    run_pipeline,
    save_dataset,
    segment_trips,
    trim_segments,
)
from .synth import Leg, SynthSpec, add_noise, generate, sample_spec, write_ais_csv

__version__ = "0.1.0"
