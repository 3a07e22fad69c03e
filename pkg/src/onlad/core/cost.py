"""Storage and iteration counts of the detector core.

Storage counts are matrix elements held by each sub-unit (n == m, since the
core is an autoencoder). Iteration counts assume a p x q by q x r product costs
p*q*r iterations and an r x r inversion costs r**3.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


def s_parameter(n: int, nh: int) -> int:
    return nh * nh + (2 * n + 1) * nh


def s_input(n: int) -> int:
    return n


def s_train(n: int, nh: int) -> int:
    return 2 * nh * nh + 4 * nh + 2 * n + 1


def s_predict(n: int, nh: int) -> int:
    return nh + n


def s_onlad(n: int, nh: int) -> int:
    """Whole-core element count, reference closed form.

    Note: this does not equal the sum of the four sub-unit counts above; see
    ``CostReport.s_components``.
    """
    return 5 * nh * nh + (5 * n + 4) * nh + 2 * n + 1


def i_train(n: int, nh: int) -> int:
    return 4 * nh * nh + (3 * n + 1) * nh


def i_predict(n: int, nh: int) -> int:
    return 2 * n * nh


def i_prod(n: int, nh: int, m: int, k: int) -> int:
    return 4 * k * nh * nh + k * (2 * k + 2 * m + n) * nh


def i_inv(k: int) -> int:
    return k ** 3


def i_batch(n: int, nh: int, m: int, k: int) -> int:
    """Iterations of one k-sample OS-ELM chunk update, products plus inversion."""
    return k * (4 * nh * nh + (2 * k + 2 * m + n) * nh + k * k)


@dataclass(frozen=True)
class CostReport:
    n: int
    n_hidden: int
    m: int
    k: int
    s_parameter: int
    s_input: int
    s_train: int
    s_predict: int
    s_onlad: int
    i_train: int
    i_predict: int
    i_prod: int
    i_inv: int
    i_batch_k: int
    i_batch_1: int

    @property
    def s_components(self) -> int:
        return self.s_parameter + self.s_input + self.s_train + self.s_predict

    def as_dict(self) -> dict:
        d = asdict(self)
        d["s_components"] = self.s_components
        return d


def cost_report(n: int, n_hidden: int, m: int | None = None, k: int = 1) -> CostReport:
    m = n if m is None else m
    if min(n, n_hidden, m, k) < 1:
        raise ValueError("all dimensions must be >= 1")
    return CostReport(
        n=n, n_hidden=n_hidden, m=m, k=k,
        s_parameter=s_parameter(n, n_hidden),
        s_input=s_input(n),
        s_train=s_train(n, n_hidden),
        s_predict=s_predict(n, n_hidden),
        s_onlad=s_onlad(n, n_hidden),
        i_train=i_train(n, n_hidden),
        i_predict=i_predict(n, n_hidden),
        i_prod=i_prod(n, n_hidden, m, k),
        i_inv=i_inv(k),
        i_batch_k=i_batch(n, n_hidden, m, k),
        i_batch_1=i_batch(n, n_hidden, m, 1),
    )
