"""Shared oracles for the test suite."""
import numpy as np


def _pattern(model, x):
    return [z > 0 for z in model.forward(x).pre_activations[:-1]]


def rel_err(a, b, floor=1e-6):
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_mlp_gradients(model, rng, batch=4, h=1e-5):
    """Compare ``Mlp.backward`` with central differences of a random linear functional.

    Parameters whose +-h perturbation flips a ReLU are skipped (the function
    is not differentiable there). Returns ``(worst relative error, skipped)``.
    """
    x = rng.normal(size=(batch, model.layer_sizes[0]))
    fwd = model.forward(x)
    up = {"d_logits": rng.normal(size=fwd.logits.shape)}
    if fwd.embedding is not None:
        up["d_embedding"] = rng.normal(size=fwd.embedding.shape)
    if fwd.pretext is not None:
        up["d_pretext"] = rng.normal(size=fwd.pretext.shape)
    up["d_features"] = rng.normal(size=fwd.features.shape)

    def objective(m, inputs):
        f = m.forward(inputs)
        total = (up["d_logits"] * f.logits).sum() + (up["d_features"] * f.features).sum()
        if f.embedding is not None:
            total += (up["d_embedding"] * f.embedding).sum()
        if f.pretext is not None:
            total += (up["d_pretext"] * f.pretext).sum()
        return total

    grads, gin = model.backward(fwd, up["d_logits"], d_features=up["d_features"],
                                d_embedding=up.get("d_embedding"), d_pretext=up.get("d_pretext"),
                                wrt_inputs=True)
    base = _pattern(model, x)
    worst, skipped = 0.0, 0
    for name, p in model.params.items():
        for idx in np.ndindex(p.shape):
            mp, mm = model.copy(), model.copy()
            mp.params[name][idx] += h
            mm.params[name][idx] -= h
            if any((a != b).any() for a, b in zip(_pattern(mp, x), base)) or \
               any((a != b).any() for a, b in zip(_pattern(mm, x), base)):
                skipped += 1
                continue
            fd = (objective(mp, x) - objective(mm, x)) / (2 * h)
            worst = max(worst, rel_err(grads[name][idx], fd))
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        if any((a != b).any() for a, b in zip(_pattern(model, xp), base)) or \
           any((a != b).any() for a, b in zip(_pattern(model, xm), base)):
            skipped += 1
            continue
        fd = (objective(model, xp) - objective(model, xm)) / (2 * h)
        worst = max(worst, rel_err(gin[idx], fd))
    return worst, skipped


def random_architecture(rng):
    depth = int(rng.integers(1, 4))
    sizes = [int(rng.integers(1, 6))] + [int(rng.integers(1, 9)) for _ in range(depth - 1)] + \
        [int(rng.integers(2, 5))]
    embed = int(rng.integers(1, 5)) if rng.random() < 0.5 else None
    pretext = 4 if rng.random() < 0.5 else None
    return sizes, embed, pretext
