"""
Forecasting runtime and correcting it while the job runs
========================================================

A small set of clustering tasks is executed and timed.  A polynomial
regression on the tasks' meta-features then predicts the runtime of each
iteration, and a linear model predicts how many iterations will run.
During a new run the ratio of predicted to observed time is tracked by a
Gaussian process, which rescales the forecasts for the remaining
iterations.
"""

from daskmeans import (
    GpAdjuster,
    KmeansConfig,
    build,
    extract_meta_features,
    fit_runtime_model,
    generate_synthetic,
    predict_runtime,
    run,
)
from daskmeans.bench import by_split, evaluate, generate_sample_set, run_all

specs = generate_sample_set(150, (1000, 8000), (10, 60), seed=0, q=10)
samples = run_all(specs)
train, test = by_split(samples, "train"), by_split(samples, "test")

models = {f"beta{b}": fit_runtime_model(train, beta=b, q=10) for b in (1, 2)}
report = evaluate(models, test, gp_model=models["beta2"])
for name, entry in report.models.items():
    print(name, {m: round(entry[m], 3) for m in ("MSE", "MAE", "WMAPE", "sMAPE")})
print("gp replay", report.gp)

# One live run: predict, then adjust after every iteration.
data = generate_synthetic(6000, 2, 40, seed=99, spread=0.01)
cfg = KmeansConfig(k=40, f=30, q=10, seed=1)
mf = extract_meta_features(data, cfg, build(data, cfg.f))
yhat = predict_runtime(mf, models["beta2"]).masked()
print("forecast total ms", round(sum(yhat), 3))

gp = GpAdjuster(sigma=50)
seen = []


def on_iteration(it, ms, _state):
    seen.append(ms)
    if it <= len(yhat):
        gp.observe(it, yhat[it - 1], ms)
    rest = list(range(it + 1, len(yhat) + 1))
    remaining = gp.adjust(rest, yhat[it:]).sum() if rest else 0.0
    print(f"after iteration {it}: observed {sum(seen):.3f} ms, adjusted total {sum(seen) + remaining:.3f} ms")


res = run(data, cfg, callback=on_iteration)
print("actual total ms", round(sum(res.per_iteration_runtimes_ms), 3))
