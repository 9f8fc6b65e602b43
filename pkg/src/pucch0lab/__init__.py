"""PUCCH Format 0 link laboratory.

Generates standard-compliant Format 0 uplink-control transmissions,
impairs them with simulated fading and noise, and decodes the embedded
control information with two interchangeable receivers: the conventional
DFT-correlation detector and a trained multilayer perceptron. Shapes are
plain numpy arrays throughout; a transmission is ``(num_symbols, 12)``
complex frequency-domain samples.
"""

from .channel import (
    ChannelConfig,
    ChannelProfile,
    apply_awgn,
    apply_channel,
    gaussian_pair,
    make_rng,
    noise_variance,
    per_instance_rng,
    tdl_frequency_response,
)
from .dataset import (
    LabeledDataset,
    OfdmParams,
    de_featurize,
    featurize,
    generate_dataset,
    ingest_iq,
    ofdm_demodulate,
    ofdm_modulate,
    read_dataset,
    read_iq,
    split,
    write_csv,
    write_dataset,
    write_iq,
)
from .dft_decoder import decode_dft, dft12
from .evaluate import (
    SweepResult,
    accuracy,
    confusion,
    confusion_csv,
    dft_predict,
    model_hash,
    nn_predict,
    size_sweep,
    sweep,
    write_sweep_files,
)
from .fileio import FileFormatError, NumericalError
from .mlp import (
    MlpModel,
    TrainConfig,
    TrainHistory,
    backward,
    forward,
    init_model,
    load_model,
    loss_ce,
    predict,
    save_model,
    sgd_momentum_step,
    train,
)
from .pucch0 import (
    Pucch0Config,
    UciContent,
    UciFormat,
    alpha_index,
    base_sequence,
    candidate_shifts,
    compute_ncs,
    generate_format0,
    mcs_to_uci,
    prbs_c,
    uci_to_mcs,
)

__version__ = "0.1.0"
