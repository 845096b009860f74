"""Teacher-student distillation: vocab, encoder, losses, curriculum, trainer."""

from .curriculum import CurriculumSchedule, apply_increment, curriculum_views, prefix_length
from .encoder import EncoderConfig, StudentEncoder, build_student, encode, encode_batch, pad_batch
from .gradcheck import max_relative_error
from .losses import cosine_loss, mask_tokens, masked_cross_entropy, mlm_loss
from .model_io import load_student, save_student
from .teacher import PrecomputedTeacher, SyntheticTeacher, Teacher, truncate_words
from .trainer import DistillConfig, TrainBatch, TrainState, train, train_step
from .vocab import BOS, EOS, MASK, NUM_SPECIALS, PAD, SPECIAL_PIECES, UNK, SubwordVocab, train_vocab

__all__ = [
    "BOS", "EOS", "MASK", "NUM_SPECIALS", "PAD", "SPECIAL_PIECES", "UNK",
    "CurriculumSchedule", "DistillConfig", "EncoderConfig",
    "PrecomputedTeacher", "StudentEncoder", "SubwordVocab", "SyntheticTeacher",
    "Teacher", "TrainBatch", "TrainState", "apply_increment", "build_student",
    "cosine_loss", "curriculum_views", "encode", "encode_batch",
    "load_student", "mask_tokens", "masked_cross_entropy",
    "max_relative_error", "mlm_loss", "pad_batch", "prefix_length",
    "save_student", "train", "train_step", "train_vocab", "truncate_words",
]
