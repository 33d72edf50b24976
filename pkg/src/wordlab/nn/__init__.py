from .layers import Adam, Conv2D, Dense, Flatten, MaxPool2D, ReLU, Sigmoid, bce_loss
from .model import (
    CnnArchitecture,
    CnnModel,
    build_model,
    compute_shapes,
    load_model,
    reduced_architecture,
    save_model,
    word_architecture,
)
from .gradcheck import grad_check
from .train import TrainConfig, accuracy, predict, predict_scores, train, train_new

__all__ = [
    "Adam", "Conv2D", "Dense", "Flatten", "MaxPool2D", "ReLU", "Sigmoid",
    "bce_loss", "CnnArchitecture", "CnnModel", "build_model", "compute_shapes",
    "load_model", "reduced_architecture", "save_model", "word_architecture",
    "grad_check", "TrainConfig", "accuracy", "predict", "predict_scores", "train",
    "train_new",
]
