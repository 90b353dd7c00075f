"""Affective agent simulation: classification, judgement and decision stacks
interacting with environments, with derivative-based appraisal and
sign-pattern emotion classification."""

from .action import (
    ActionVector,
    ProsocialParams,
    decide,
    detect_indecision,
    prosocial_act,
    prosocial_benefit,
)
from .appraisal import (
    Agent,
    AppraisalSnapshot,
    CoreValueVector,
    build_snapshot,
    dissonance,
    efficacy,
    judge,
    perceived_valence,
    relative_self_efficacy,
    self_efficacy,
    self_worth,
    valence,
)
from .emotion import DEFAULT_TABLE, EmotionTable, SignPattern, classify_emotions, sentiment_map_spec, sign_of, surprise
from .environment import (
    DyadEnvironment,
    DyadParams,
    IdentityEnvironment,
    InfluenceFunction,
    LinearEnvironment,
    apple_matrix,
    expected_core_values,
    run_loop,
    step_dyad,
    step_linear,
)
from .neuroware import ProfileParams, generate_profile, render_heatmap
from .numerics import Activation, analytic_layer_jacobian, apply_activation, fd_jacobian
from .perception import (
    Constellation,
    FocusProfile,
    Layer,
    NetworkStack,
    StimulusVector,
    apply_focus,
    classify,
    degree_of_perception,
    perceived_correlation,
    quantize,
)
from .scenario_io import parse_scenario, serialize_scenario, validate, write_trajectory

__version__ = "0.1.0"
