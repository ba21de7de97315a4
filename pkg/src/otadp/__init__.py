"""Differentially private over-the-air federated learning simulator."""
from .bound import BoundConstants, TraceEstimator, eval_bound, eval_constants
from .channel import ChannelDraw, check_power, draw_channels, ota_aggregate, power_from_snr
from .data import gen_synthetic, load_table, partition_table, train_test_split
from .errors import (ConfigError, DegeneratePrivacy, InvalidInput, InvalidShape,
                     InvariantViolation)
from .model import (Algorithm, ClientRecord, LocalHyper, ModelParams, clip_update, forward_loss,
                    grad, init_model, local_solve, mlp_shapes)
from .power import (build_transmit_signal, client_pc_factor, compute_s, design_jammer,
                    dynamic_alpha_u, jammer_for_budget, jammer_needed,
                    required_noise_variance)
from .privacy import (EffectiveNoise, PrivacyLedger, compute_a, epsilon_for_client,
                      epsilon_max_client, epsilon_upper_bound, record_round)
from .protocol import (LambdaSchedule, ProtocolSettings, RoundMetrics, Trainer,
                       even_global_update, odd_global_update)
from .runner import ExperimentConfig, emit_csv, load_config, parse_config, run_experiment
from .svg import emit_svg

__version__ = "0.1.0"
