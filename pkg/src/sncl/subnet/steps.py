"""Update rules for scored parameters.

Forward passes use the effective weight w = θ ⊙ m. After backward:

  - the raw-weight gradient already carries the mask factor (chain rule
    through the product), and the weight step additionally gates it by
    (1 - M_prev) so weights claimed by earlier sessions never move;
  - the score step routes the effective-weight gradient straight through
    the (non-differentiable) mask: grad_ρ := grad_w ⊙ θ, ungated.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .scored import ScoredParameter


def gated_weight_step(opt, param: ScoredParameter, grad: np.ndarray,
                      gate: np.ndarray | None = None) -> None:
    """θ ← θ - lr * step(grad ⊙ gate) ⊙ gate; gate defaults to 1 - accumulated."""
    if grad.shape != param.shape:
        raise ShapeError(f"{param.name}: grad shape {grad.shape} != {param.shape}")
    if gate is None:
        gate = param.prior_gate()
    opt.step(param.name, param.theta, grad, grad_gate=gate, delta_gate=gate)


def ste_score_step(opt, param: ScoredParameter, eff_grad: np.ndarray) -> None:
    """ρ ← ρ - lr * step(grad_w ⊙ θ), no gating: scores keep learning everywhere."""
    if eff_grad.shape != param.shape:
        raise ShapeError(f"{param.name}: grad shape {eff_grad.shape} != {param.shape}")
    opt.step(param.name + "/score", param.rho, eff_grad * param.theta)
