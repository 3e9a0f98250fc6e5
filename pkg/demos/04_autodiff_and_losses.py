"""The tape-based autodiff core and the two metric-learning losses.

Everything the networks need is a fixed op vocabulary over numpy
arrays; gradients are recorded on an explicit Tape and replayed once in
reverse. The margin ranking hinge and the anchor regression are ordinary
compositions of those ops.
"""

import numpy as np

from modsr import autodiff as ad
from modsr.autodiff import Tape, Tensor
from modsr.train import anchor_loss, margin_ranking_loss

# a tiny taped computation: y = mean((conv(x, w) - 1)^2)
rng = np.random.default_rng(0)
x = Tensor(rng.random((1, 3, 8, 8)))
w = Tensor(rng.standard_normal((2, 3, 3, 3)) * 0.2, requires_grad=True)
b = Tensor(np.zeros(2), requires_grad=True)

with Tape() as tape:
    y = ad.conv2d(x, w, b, padding=1)
    loss = ad.mean(ad.square(ad.sub(y, 1.0)))
tape.backward(loss)
print(f"loss={loss.item():.4f}  |dw|={np.abs(w.grad).mean():.5f}  |db|={np.abs(b.grad).mean():.5f}")

# numeric check of one weight entry
eps = 1e-5
w.data[0, 0, 0, 0] += eps
hi = ad.mean(ad.square(ad.sub(ad.conv2d(x, w, b, padding=1), 1.0))).item()
w.data[0, 0, 0, 0] -= 2 * eps
lo = ad.mean(ad.square(ad.sub(ad.conv2d(x, w, b, padding=1), 1.0))).item()
w.data[0, 0, 0, 0] += eps
print(f"analytic {w.grad[0, 0, 0, 0]:+.8f}  vs  central-diff {(hi - lo) / (2 * eps):+.8f}")

# the ranking hinge: zero once the pair is separated by the margin
for s_hi, s_lo in [(0.6, 0.4), (0.5, 0.5), (0.4, 0.6)]:
    print(f"ranking(s_hi={s_hi}, s_lo={s_lo}, gamma=0.05) ->",
          f"{margin_ranking_loss(s_hi, s_lo, 0.05).item():.3f}")

# the anchors pull the maximal sample to 1 and the clean sample to 0
print("anchor(1,1,0,0) =", anchor_loss(1.0, 1.0, 0.0, 0.0).item())
print("anchor(0,0,1,1) =", anchor_loss(0.0, 0.0, 1.0, 1.0).item())
