"""Template-vector SVMs with kernels computed on a simulated memtransistor crossbar."""
from .crossbar import CrossbarArray, ReadoutConfig, ideal_mvm, program, read_mvm
from .data import Dataset, SplitSpec, gen_synthetic, load_csv, normalize, split
from .device import DeviceParams, MemtransistorCell, Polarity, PulseLog, apply_pulse, energy_of, state_ladder
from .svm import (
    KernelSpec,
    TemplateSvmModel,
    TrainedSvm,
    fold_weights,
    load_model,
    phi_features,
    predict,
    predict_batch,
    save_model,
    synthesize_kernel,
    train_dual,
    train_multiclass,
)
from .templates import choose_templates

__version__ = "0.1.0"
