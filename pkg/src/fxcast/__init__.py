"""fxcast: from-scratch exchange rate forecasting with LSTM, simple RNN and
dense backprop networks, trained by hand-derived analytic gradients."""

from .dataio import (
    PriceSeries,
    StatsRow,
    chronological_split,
    parse_price_csv,
    price_csv,
    resample_last,
    split_index,
    stats_csv,
    summary_stats,
)
from .errors import (
    ConfigError,
    DataError,
    FxcastError,
    NonFiniteGradient,
    ShapeError,
    TrainingDiverged,
    TrainingError,
)
from .evalkit import (
    ErrorTable,
    MetricsReport,
    error_table,
    error_table_csv,
    evaluate,
    mae,
    mape,
    metrics_report,
    parse_error_table_csv,
    render_error_table,
    rmse,
)
from .models import (
    Architecture,
    LstmParams,
    ModelSpec,
    MlpParams,
    RnnParams,
    forward_prediction,
    init_params,
    load_model,
    lstm_forward,
    lstm_step,
    mlp_forward,
    predict,
    rnn_forward,
    rnn_step,
    save_model,
)
from .numkit import ActivationKind, activate, activate_prime, matvec
from .pipeline import (
    Scaler,
    WindowedDataset,
    fit_scaler,
    make_windows,
    scale,
    unscale,
)
from .train import (
    LossHistory,
    TrainConfig,
    apply_dropout,
    bptt_gradients,
    dataset_mse,
    gradient_check,
    loss_history_csv,
    mlp_backprop_step,
    mlp_gradients,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "Architecture",
    "ConfigError",
    "DataError",
    "ErrorTable",
    "FxcastError",
    "LossHistory",
    "LstmParams",
    "MetricsReport",
    "MlpParams",
    "ModelSpec",
    "NonFiniteGradient",
    "PriceSeries",
    "RnnParams",
    "Scaler",
    "ShapeError",
    "StatsRow",
    "TrainConfig",
    "TrainingDiverged",
    "TrainingError",
    "WindowedDataset",
    "activate",
    "activate_prime",
    "apply_dropout",
    "bptt_gradients",
    "chronological_split",
    "dataset_mse",
    "error_table",
    "error_table_csv",
    "evaluate",
    "fit_scaler",
    "forward_prediction",
    "gradient_check",
    "init_params",
    "load_model",
    "loss_history_csv",
    "lstm_forward",
    "lstm_step",
    "mae",
    "make_windows",
    "mape",
    "matvec",
    "metrics_report",
    "mlp_backprop_step",
    "mlp_forward",
    "mlp_gradients",
    "parse_error_table_csv",
    "parse_price_csv",
    "predict",
    "price_csv",
    "render_error_table",
    "resample_last",
    "rmse",
    "rnn_forward",
    "rnn_step",
    "save_model",
    "scale",
    "split_index",
    "stats_csv",
    "summary_stats",
    "train",
    "unscale",
]
