"""Central finite differences used as the gradient oracle across test modules."""

import numpy as np


def fd_grad(f, arr, eps=1e-5):
    """Numerical d f() / d arr by central differences, mutating arr in place."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        a0 = arr[i]
        arr[i] = a0 + eps
        lp = f()
        arr[i] = a0 - eps
        lm = f()
        arr[i] = a0
        g[i] = (lp - lm) / (2 * eps)
    return g


def assert_grads_close(analytic, numeric, rtol=1e-5, atol=1e-7, label=""):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    err = np.abs(analytic - numeric)
    tol = atol + rtol * np.abs(numeric)
    worst = (err - tol).max()
    assert (err <= tol).all(), f"{label}: worst excess {worst:.3e}, max err {err.max():.3e}"


def check_against_fd(make_loss, arrays, rtol=1e-5, atol=1e-7):
    """make_loss() rebuilds the graph from `arrays` and returns (loss, leaves).

    Leaves must wrap the arrays without copying so the FD probe sees edits.
    """
    loss, leaves = make_loss()
    loss.backward()
    for arr, leaf in zip(arrays, leaves):
        assert leaf.data is arr, "leaf must alias its array for FD probing"
        num = fd_grad(lambda: make_loss()[0].item(), arr)
        ana = leaf.grad if leaf.grad is not None else np.zeros_like(arr)
        assert_grads_close(ana, num, rtol=rtol, atol=atol, label=f"shape {arr.shape}")
