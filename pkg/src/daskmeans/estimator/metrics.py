"""Error metrics for runtime predictions."""
import numpy as np


def _pair(y, yhat):
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ValueError("y and yhat differ in shape")
    return y, yhat


def mse(y, yhat):
    y, yhat = _pair(y, yhat)
    return float(np.mean((y - yhat) ** 2))


def mae(y, yhat):
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def wmape(y, yhat):
    """``sum|y - yhat| / sum|y|``."""
    y, yhat = _pair(y, yhat)
    denom = np.sum(np.abs(y))
    err = np.sum(np.abs(y - yhat))
    if denom == 0:
        return 0.0 if err == 0 else float("inf")
    return float(err / denom)


def smape(y, yhat):
    """Symmetric MAPE in percent, between 0 and 200.  A pair of zeros scores 0."""
    y, yhat = _pair(y, yhat)
    denom = np.abs(y) + np.abs(yhat)
    num = 2.0 * np.abs(y - yhat)
    terms = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(100.0 * np.mean(terms))


def all_metrics(y, yhat):
    return {"MSE": mse(y, yhat), "MAE": mae(y, yhat),
            "WMAPE": wmape(y, yhat), "sMAPE": smape(y, yhat)}
