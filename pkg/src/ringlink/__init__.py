"""Simulation toolkit for a semi-passive inductive ring-to-wristband link:
resonant coils, coupling, bridge readout, FSK ring encoder, decoder and power budget."""

from .channel import Calibration, InductiveLink, LinkGeometry, coupling_coefficient, load_calibration
from .circuit import ResonantCoil, coil_impedance, delta_z_wrist, resonant_frequency, ring_coil, wrist_coil
from .decoder import DecodedEvent, DecoderConfig, PeakDetection, classify, detect_peak, event_stream
from .errors import (
    ConfigurationError,
    ContractViolation,
    DegenerateNoiseError,
    OutOfCalibrationError,
    ScriptParseError,
    SingularLoadError,
    TimeRegressionError,
)
from .power import BatteryModel, DutyCycle, PowerProfile, average_current, discharge_runtime, lifespan
from .readout import BridgeConfig, LinkSystem, SpectrumFrame, SweepConfig, compute_snr, measure_snr, sweep
from .ring import CARRIERS, Mode, MouseSymbol, RingSimulator, RingState, ScrollEvent, encode, fsm_step
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "BatteryModel", "BridgeConfig", "CARRIERS", "Calibration", "ConfigurationError", "ContractViolation",
    "DecodedEvent", "DecoderConfig", "DegenerateNoiseError", "DutyCycle", "InductiveLink", "LinkGeometry",
    "LinkSystem", "Mode", "MouseSymbol", "OutOfCalibrationError", "PeakDetection", "PowerProfile",
    "ResonantCoil", "RingSimulator", "RingState", "Scenario", "ScriptParseError", "ScrollEvent",
    "SingularLoadError", "SpectrumFrame", "SweepConfig", "TimeRegressionError", "average_current",
    "classify", "coil_impedance", "compute_snr", "coupling_coefficient", "delta_z_wrist", "detect_peak",
    "discharge_runtime", "encode", "event_stream", "fsm_step", "lifespan", "load_calibration",
    "load_scenario", "measure_snr", "resonant_frequency", "ring_coil", "sweep", "wrist_coil",
]
