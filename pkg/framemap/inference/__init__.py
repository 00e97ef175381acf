"""Particle-based inference over object and frame locations."""
from .belief import BeliefState, carried_classes, tracked_frames
from .frame_filter import predict_frame, update_frame, update_frame_filter
from .object_filter import update_object_filter
from .particles import (
    ParticleSet,
    effective_sample_size,
    init_particles_from_prior,
    init_uniform,
    reinvigorate,
    resample,
    summarize,
)
from .potentials import PotentialParams, context_factor, log_mixture_density, measurement_factor

__all__ = [
    "BeliefState",
    "ParticleSet",
    "PotentialParams",
    "carried_classes",
    "context_factor",
    "effective_sample_size",
    "init_particles_from_prior",
    "init_uniform",
    "log_mixture_density",
    "measurement_factor",
    "predict_frame",
    "reinvigorate",
    "resample",
    "summarize",
    "tracked_frames",
    "update_frame",
    "update_frame_filter",
    "update_object_filter",
]
