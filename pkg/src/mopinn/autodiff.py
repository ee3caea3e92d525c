"""Second-order jets and a reverse-mode tape.

Network outputs are propagated as jets ``(v, dx, dt, dxx)``: the value, its
first derivatives in the two inputs, and the second derivative in x. These
four channels are the smallest set the residual operators in this package
need. Gradients of any scalar assembled from jets with respect to network
parameters come from replaying a recorded operation tape backwards.

The dxx channel makes the backward pass unusual: the forward rule for an
activation is

    out.dxx = s2 * dx**2 + s1 * dxx        (s_k = k-th derivative of sigma)

so the adjoint of the pre-activation value needs s3. Every activation kind
therefore supplies derivatives up to third order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ContractViolationError, UsageError

Array = np.ndarray


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Activation:
    """Elementwise nonlinearity with closed-form derivatives up to order 3."""

    name: str
    f: Callable[[Array], Array]
    d1: Callable[[Array], Array]
    d2: Callable[[Array], Array]
    d3: Callable[[Array], Array]


def _tanh_d1(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _tanh_d2(z):
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t * t)


def _tanh_d3(z):
    t = np.tanh(z)
    return (6.0 * t * t - 2.0) * (1.0 - t * t)


ACTIVATIONS: dict[str, Activation] = {
    "tanh": Activation("tanh", np.tanh, _tanh_d1, _tanh_d2, _tanh_d3),
    "identity": Activation(
        "identity",
        lambda z: z,
        lambda z: np.ones_like(z),
        lambda z: np.zeros_like(z),
        lambda z: np.zeros_like(z),
    ),
    # z**2 lets tests build exact polynomials out of tiny networks
    "square": Activation(
        "square",
        lambda z: z * z,
        lambda z: 2.0 * z,
        lambda z: np.full_like(z, 2.0),
        lambda z: np.zeros_like(z),
    ),
}


def get_activation(kind: str) -> Activation:
    try:
        return ACTIVATIONS[kind]
    except KeyError:
        raise ContractViolationError(f"unknown activation kind {kind!r}") from None


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet2:
    """Scalar jet: value, d/dx, d/dt and d2/dx2 at a single point."""

    v: float
    dx: float
    dt: float
    dxx: float


def jet_const(c: float) -> Jet2:
    return Jet2(float(c), 0.0, 0.0, 0.0)


def jet_seed_x(x: float) -> Jet2:
    return Jet2(float(x), 1.0, 0.0, 0.0)


def jet_seed_t(t: float) -> Jet2:
    return Jet2(float(t), 0.0, 1.0, 0.0)


class Jets:
    """A batch of jets held channel-wise.

    Channels are either all numpy arrays (plain evaluation) or all tape
    variables (recorded evaluation); their shapes agree. Arithmetic on the
    channels is done by the caller, so the same loss-assembly code serves
    both representations.
    """

    __slots__ = ("v", "dx", "dt", "dxx")

    def __init__(self, v, dx, dt, dxx):
        self.v = v
        self.dx = dx
        self.dt = dt
        self.dxx = dxx

    def take(self, idx: Array) -> "Jets":
        """Row subset, usable on both plain and taped channels."""
        if isinstance(self.v, Var):
            return Jets(self.v.take(idx), self.dx.take(idx),
                        self.dt.take(idx), self.dxx.take(idx))
        return Jets(self.v[idx], self.dx[idx], self.dt[idx], self.dxx[idx])

    def width(self) -> int:
        shape = self.v.value.shape if isinstance(self.v, Var) else self.v.shape
        return shape[-1] if len(shape) > 1 else 1


def seed_input_jets(xs: Array, ts: Array, input_dim: int) -> Jets:
    """Input-layer jets for a batch of points.

    One input (dim 1): the network sees only t. Two inputs: columns (x, t),
    with x carrying the dx seed and t the dt seed. dxx seeds are zero either
    way; for one-dimensional problems the whole x channel stays identically
    zero through the network.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    n = ts.shape[0]
    if input_dim == 1:
        v = ts.reshape(n, 1)
        dx = np.zeros((n, 1))
        dt = np.ones((n, 1))
    elif input_dim == 2:
        v = np.column_stack([xs, ts])
        dx = np.column_stack([np.ones(n), np.zeros(n)])
        dt = np.column_stack([np.zeros(n), np.ones(n)])
    else:
        raise ContractViolationError(f"unsupported input dimension {input_dim}")
    return Jets(v, dx, dt, np.zeros((n, input_dim)))


def jet_affine(weights: Array, bias: Array, jets: Jets) -> Jets:
    """Affine layer applied to every jet channel.

    Differentiation is linear, so each channel is transformed independently;
    only the value channel receives the bias.
    """
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    in_width = jets.v.shape[-1]
    if weights.ndim != 2 or weights.shape[1] != in_width:
        raise ContractViolationError(
            f"weight shape {weights.shape} incompatible with input width {in_width}"
        )
    if bias.shape != (weights.shape[0],):
        raise ContractViolationError(
            f"bias shape {bias.shape} incompatible with weight rows {weights.shape[0]}"
        )
    wt = weights.T
    return Jets(jets.v @ wt + bias, jets.dx @ wt, jets.dt @ wt, jets.dxx @ wt)


def jet_activation(z: Union[Jet2, Jets], kind: str):
    """Apply an activation through all four jet channels.

    out.v   = s(z.v)
    out.dx  = s1 * z.dx          (same for dt)
    out.dxx = s2 * z.dx**2 + s1 * z.dxx
    """
    act = get_activation(kind)
    if isinstance(z, Jet2):
        zv = np.float64(z.v)
        s1 = act.d1(zv)
        s2 = act.d2(zv)
        return Jet2(
            float(act.f(zv)),
            float(s1 * z.dx),
            float(s1 * z.dt),
            float(s2 * z.dx * z.dx + s1 * z.dxx),
        )
    s1 = act.d1(z.v)
    s2 = act.d2(z.v)
    return Jets(
        act.f(z.v),
        s1 * z.dx,
        s1 * z.dt,
        s2 * z.dx * z.dx + s1 * z.dxx,
    )


def forward_jet_batch(net, xs: Array, ts: Array) -> Jets:
    """Propagate jets through the network at a batch of points.

    Returns jets of the scalar network output, channels shaped (n,).
    """
    jets = seed_input_jets(xs, ts, net.layer_sizes[0])
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        jets = jet_affine(w, b, jets)
        if i < last:
            jets = jet_activation(jets, net.hidden_activation)
    return Jets(jets.v[:, 0], jets.dx[:, 0], jets.dt[:, 0], jets.dxx[:, 0])


def forward_jet(net, x: float, t: float) -> Jet2:
    """Network value and input derivatives at a single point."""
    if net.layer_sizes[0] not in (1, 2):
        raise ContractViolationError(
            f"network input width {net.layer_sizes[0]} is not 1 or 2"
        )
    jets = forward_jet_batch(net, np.array([x]), np.array([t]))
    return Jet2(float(jets.v[0]), float(jets.dx[0]),
                float(jets.dt[0]), float(jets.dxx[0]))


# ---------------------------------------------------------------------------
# reverse-mode tape
# ---------------------------------------------------------------------------

class Var:
    """A value recorded on a tape.

    Arithmetic with plain numbers/arrays treats them as constants. Creation
    order on the tape is a topological order, so the backward sweep is a
    single reversed pass.
    """

    __slots__ = ("value", "grad", "tape", "_backward")
    __array_ufunc__ = None  # keep numpy from consuming Var operands

    def __init__(self, value, tape: "Tape", backward=None):
        self.value = value
        self.grad = None
        self.tape = tape
        self._backward = backward
        tape.nodes.append(self)

    # -- helpers ------------------------------------------------------------

    def _accumulate(self, g):
        self.grad = g if self.grad is None else self.grad + g

    @staticmethod
    def _raw(other):
        return other.value if isinstance(other, Var) else other

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Var):
            def backward(g, a=self, b=other):
                a._accumulate(g)
                b._accumulate(g)
            return Var(self.value + other.value, self.tape, backward)

        def backward(g, a=self):
            a._accumulate(g)
        return Var(self.value + other, self.tape, backward)

    __radd__ = __add__

    def __neg__(self):
        def backward(g, a=self):
            a._accumulate(-g)
        return Var(-self.value, self.tape, backward)

    def __sub__(self, other):
        if isinstance(other, Var):
            def backward(g, a=self, b=other):
                a._accumulate(g)
                b._accumulate(-g)
            return Var(self.value - other.value, self.tape, backward)

        def backward(g, a=self):
            a._accumulate(g)
        return Var(self.value - other, self.tape, backward)

    def __rsub__(self, other):
        def backward(g, a=self):
            a._accumulate(-g)
        return Var(other - self.value, self.tape, backward)

    def __mul__(self, other):
        if isinstance(other, Var):
            def backward(g, a=self, b=other):
                a._accumulate(g * b.value)
                b._accumulate(g * a.value)
            return Var(self.value * other.value, self.tape, backward)

        def backward(g, a=self, c=other):
            a._accumulate(g * c)
        return Var(self.value * other, self.tape, backward)

    __rmul__ = __mul__

    # -- recorded elementary ops ---------------------------------------------

    def square(self):
        def backward(g, a=self):
            a._accumulate(g * (2.0 * a.value))
        return Var(self.value * self.value, self.tape, backward)

    def mean(self):
        size = self.value.size

        def backward(g, a=self, n=size):
            a._accumulate(np.full_like(a.value, g / n))
        return Var(float(np.mean(self.value)), self.tape, backward)

    def take(self, idx):
        # idx: any advanced index usable with np.add.at (row array, tuple, ...)
        def backward(g, a=self, i=idx):
            buf = np.zeros_like(a.value)
            np.add.at(buf, i, g)
            a._accumulate(buf)
        return Var(self.value[idx], self.tape, backward)


class Tape:
    """Ordered record of operations; replayed in reverse for gradients."""

    def __init__(self):
        self.nodes: list[Var] = []

    def leaf(self, value: Array) -> Var:
        return Var(np.asarray(value, dtype=np.float64), self, None)

    def gradient(self, loss: Var, leaves: Sequence[Var]) -> list[Array]:
        """Exact gradient of a recorded scalar w.r.t. the given leaves."""
        if loss.tape is not self:
            raise UsageError("loss was not recorded on this tape")
        if not np.ndim(loss.value) == 0:
            raise UsageError("gradient target must be a scalar")
        for node in self.nodes:
            node.grad = None
        loss.grad = np.float64(1.0)
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)
        return [
            leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value)
            for leaf in leaves
        ]


# taped counterparts of the jet forward pass ---------------------------------

def _taped_linear(x: Var, w: Var) -> Var:
    def backward(g, a=x, b=w):
        a._accumulate(g @ b.value)
        b._accumulate(g.T @ a.value)
    return Var(x.value @ w.value.T, x.tape, backward)


def _taped_bias(z: Var, b: Var) -> Var:
    def backward(g, a=z, c=b):
        a._accumulate(g)
        c._accumulate(g.sum(axis=0))
    return Var(z.value + b.value, z.tape, backward)


def _taped_act_value(zv: Var, act: Activation) -> Var:
    s1 = act.d1(zv.value)

    def backward(g, a=zv, s=s1):
        a._accumulate(g * s)
    return Var(act.f(zv.value), zv.tape, backward)


def _taped_act_scale(zv: Var, d: Var, act: Activation) -> Var:
    """s1(zv) * d, the first-derivative channel rule."""
    s1 = act.d1(zv.value)

    def backward(g, a=zv, b=d, s=s1, f2=act.d2):
        a._accumulate(g * f2(a.value) * b.value)
        b._accumulate(g * s)
    return Var(s1 * d.value, zv.tape, backward)


def _taped_act_curv(zv: Var, dx: Var, dxx: Var, act: Activation) -> Var:
    """s2(zv) * dx**2 + s1(zv) * dxx, the dxx channel rule."""
    s1 = act.d1(zv.value)
    s2 = act.d2(zv.value)

    def backward(g, a=zv, b=dx, c=dxx, s_1=s1, s_2=s2, f3=act.d3):
        a._accumulate(g * (f3(a.value) * b.value * b.value + s_2 * c.value))
        b._accumulate(g * 2.0 * s_2 * b.value)
        c._accumulate(g * s_1)
    return Var(s2 * dx.value * dx.value + s1 * dxx.value, zv.tape, backward)


class TapedEvaluation:
    """One recorded evaluation of a network.

    Registers every layer's parameters as tape leaves (in flatten order),
    exposes a jet forward pass whose channels are tape variables, and turns
    any scalar built from them into a parameter gradient.
    """

    def __init__(self, net):
        self.net = net
        self.tape = Tape()
        self._leaves: list[Var] = []
        self._layers: list[tuple[Var, Var]] = []
        for w, b in zip(net.weights, net.biases):
            wv = self.tape.leaf(w)
            bv = self.tape.leaf(b)
            self._leaves.extend([wv, bv])
            self._layers.append((wv, bv))

    def forward_jets(self, xs: Array, ts: Array) -> Jets:
        plain = seed_input_jets(xs, ts, self.net.layer_sizes[0])
        jets = Jets(*(self.tape.leaf(ch) for ch in
                      (plain.v, plain.dx, plain.dt, plain.dxx)))
        act = get_activation(self.net.hidden_activation)
        last = len(self._layers) - 1
        for i, (wv, bv) in enumerate(self._layers):
            zv = _taped_bias(_taped_linear(jets.v, wv), bv)
            zdx = _taped_linear(jets.dx, wv)
            zdt = _taped_linear(jets.dt, wv)
            zdxx = _taped_linear(jets.dxx, wv)
            if i < last:
                jets = Jets(
                    _taped_act_value(zv, act),
                    _taped_act_scale(zv, zdx, act),
                    _taped_act_scale(zv, zdt, act),
                    _taped_act_curv(zv, zdx, zdxx, act),
                )
            else:
                jets = Jets(zv, zdx, zdt, zdxx)
        idx = np.arange(jets.v.value.shape[0]), 0
        return Jets(jets.v.take(idx), jets.dx.take(idx),
                    jets.dt.take(idx), jets.dxx.take(idx))

    def grad_params(self, loss: Var) -> Array:
        """Gradient of a recorded scalar w.r.t. the flat parameter vector."""
        if not self.tape.nodes:
            raise UsageError("tape is empty")
        if not isinstance(loss, Var) or loss.tape is not self.tape:
            raise UsageError("loss was not recorded through this evaluation")
        grads = self.tape.gradient(loss, self._leaves)
        return np.concatenate([g.ravel() for g in grads])


def grad_params(evaluation: TapedEvaluation, loss: Var) -> Array:
    """Module-level alias for :meth:`TapedEvaluation.grad_params`."""
    return evaluation.grad_params(loss)
