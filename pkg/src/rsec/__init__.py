"""README section classification: parsing, preprocessing, a small
trainable transformer encoder with optional low-rank adapters, and
multi-label evaluation."""

from .abstraction import (
    COUNT_KEYS,
    PLACEHOLDERS,
    AbstractedSection,
    AbstractionConfig,
    abstract_content,
    abstract_text,
)
from .dataset import (
    LABELS,
    LabeledSection,
    SplitSpec,
    kfold,
    load_gold,
    oversample,
    parse_labels,
    stratified_split,
    write_gold,
)
from .metrics import (
    MetricsReport,
    format_table,
    kappa_flat,
    mcc_flat,
    report,
    roc_auc_weighted,
    weighted_f1,
)
from .model import (
    CheckpointError,
    EncoderConfig,
    LoraConfig,
    ModelParameters,
    TrainingConfig,
    TrainingDivergedError,
    apply_lora,
    bce_loss,
    count_trainable,
    decide,
    encode_dataset,
    forward,
    full_param_count,
    init_model,
    load_checkpoint,
    lora_param_count,
    loss_and_grads,
    merge_lora,
    predict,
    predict_scores,
    save_checkpoint,
    train,
    train_step,
)
from .normalize import (
    TokenSequence,
    Vocabulary,
    build_vocab,
    decode,
    encode,
    lemmatize,
    load_vocab,
    save_vocab,
    tokenize,
    tokenize_normalize,
)
from .parser import ReadmeDocument, Section, iter_markdown_files, parse_file, parse_sections

__version__ = "0.1.0"
