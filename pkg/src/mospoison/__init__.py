"""Backdoor data-poisoning testbed for speech-quality (MOS) regression.

Pipeline: synthesize a labeled corpus -> implant presence-event triggers ->
train clean and poisoned regressors -> report PLCC/ASR across the four
(model x test set) quadrants, plus rate/target/transfer ablations.
"""

from .audio import SAMPLE_RATE, Waveform, read_wav, write_wav
from .corpus import (
    CorpusSpec,
    Dataset,
    DegradationParams,
    LabeledClip,
    apply_degradation,
    build_corpus,
    generate_clean_clip,
    severity_to_mos,
    split_dataset,
)
from .evaluation import EvalReport, asr, evaluate_quadrants, plcc
from .features import FeatureFrames, extract_features, log_mel, stft_power
from .poisoning import (
    PoisonedDataset,
    PoisonPlan,
    build_poisoned_test_set,
    poison_training_set,
    select_poison_indices,
)
from .regressor import (
    RegressorParams,
    TrainConfig,
    forward,
    init_params,
    loss_and_grad,
    predict_batch,
    train,
)
from .triggers import (
    PacketLossDraw,
    TriggerSpec,
    implant,
    implant_noise_baseline,
    implant_packet_loss,
    implant_spectral_signature,
    sample_packet_loss,
)

__version__ = "0.1.0"
