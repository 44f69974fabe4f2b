"""Named parameter tensors, Adam updates, and bit-exact checkpointing."""

import io
import json

import numpy as np

from .autodiff import GruWeights, Tensor
from .errors import CheckpointError, ShapeError, TrainingError

CHECKPOINT_FORMAT = "glmp-checkpoint"
CHECKPOINT_VERSION = 1

INIT_RANGE = 0.1  # uniform [-0.1, 0.1] for weight/embedding matrices


class ParamStore:
    """Trainable tensors plus per-parameter Adam moment accumulators."""

    def __init__(self, seed=0):
        self.params: dict[str, Tensor] = {}
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.step = 0
        self.seed = seed

    def add(self, name, data):
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)
        self.params[name] = t
        self.adam_m[name] = np.zeros_like(t.data)
        self.adam_v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def names(self):
        return list(self.params)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def ensure_grads(self):
        """Give parameters untouched by backward an explicit zero gradient."""
        for p in self.params.values():
            if p.grad is None:
                p.zero_grad()

    def scale_grads(self, factor):
        for p in self.params.values():
            if p.grad is not None:
                p.grad *= factor

    def grad_norm(self):
        total = 0.0
        for p in self.params.values():
            if p.grad is not None:
                total += float((p.grad * p.grad).sum())
        return total ** 0.5


def adam_step(store: ParamStore, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with bias correction over every parameter in the store."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    store.step += 1
    t = store.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in store.params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        m = store.adam_m[name]
        v = store.adam_v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def uniform_init(rng, shape):
    return rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape)


def add_gru(store: ParamStore, rng, prefix, d_in, d_h) -> GruWeights:
    """Register the nine GRU gate tensors under `prefix.` names."""
    def w(kind, shape, zero=False):
        data = np.zeros(shape) if zero else uniform_init(rng, shape)
        return store.add(f"{prefix}.{kind}", data)

    return GruWeights(
        w_z=w("w_z", (d_h, d_in)), u_z=w("u_z", (d_h, d_h)), b_z=w("b_z", (d_h,), zero=True),
        w_r=w("w_r", (d_h, d_in)), u_r=w("u_r", (d_h, d_h)), b_r=w("b_r", (d_h,), zero=True),
        w_h=w("w_h", (d_h, d_in)), u_h=w("u_h", (d_h, d_h)), b_h=w("b_h", (d_h,), zero=True),
    )


def gru_view(store: ParamStore, prefix) -> GruWeights:
    return GruWeights(**{kind: store[f"{prefix}.{kind}"]
                         for kind in ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")})


def save_checkpoint(path, store: ParamStore, meta=None):
    """Write params + Adam moments + metadata; float64 arrays round-trip bit-exactly."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "step": store.step,
        "seed": store.seed,
        "meta": meta or {},
    }
    arrays = {"__header__": np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8)}
    for name, p in store.params.items():
        arrays[f"p:{name}"] = p.data
        arrays[f"m:{name}"] = store.adam_m[name]
        arrays[f"v:{name}"] = store.adam_v[name]
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as f:
        f.write(buf.getvalue())


def load_checkpoint(path):
    """Return (ParamStore, meta dict). Raises CheckpointError on bad files."""
    try:
        with np.load(path) as z:
            arrays = {k: z[k] for k in z.files}
    except Exception as e:  # noqa: BLE001 - normalize IO/format failures
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if "__header__" not in arrays:
        raise CheckpointError(f"{path} is not a checkpoint (missing header)")
    header = json.loads(bytes(arrays["__header__"]).decode("utf-8"))
    if header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: unknown checkpoint format {header.get('format')!r}")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint version {header.get('version')} != supported {CHECKPOINT_VERSION}")
    store = ParamStore(seed=header.get("seed", 0))
    store.step = header.get("step", 0)
    for key, arr in arrays.items():
        if key.startswith("p:"):
            name = key[2:]
            t = Tensor(arr.astype(np.float64, copy=True), requires_grad=True)
            store.params[name] = t
            store.adam_m[name] = arrays[f"m:{name}"].astype(np.float64, copy=True)
            store.adam_v[name] = arrays[f"v:{name}"].astype(np.float64, copy=True)
    return store, header.get("meta", {})
