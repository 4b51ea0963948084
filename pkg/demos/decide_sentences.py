"""Decide a few sentences in several configurations and cross-check on finite models.

    python demos/decide_sentences.py
"""

from genendo import KernelConfig, Poly, FieldSpec, fml_parse, qe_full, qe_decide_sentence
from genendo.finmodel import fm_stabilized

F2 = FieldSpec.prime(2)
X = Poly.parse("X", F2)

CONFIGS = {
    "C_0": KernelConfig.c_zero(F2),
    "C_inf": KernelConfig.c_infinity(F2),
    "MiPo X^2": KernelConfig.from_mipo(Poly.parse("X^2", F2)),
    "C(X)=1": KernelConfig.transcendental(F2, {X: 1}),
}

SENTENCES = [
    "A x. E y. T(y) = x",
    "E x. x != 0 & T(x) = 0",
    "A x. T^2(x) = 0",
    "A x. (T(x) != 0 | E y. T(y) = x)",
]


def main():
    for name, cfg in CONFIGS.items():
        print(f"== {name}")
        for src in SENTENCES:
            phi = fml_parse(src, F2)
            truth = qe_decide_sentence(phi, cfg)
            st = fm_stabilized(phi, cfg, qe_full(phi, cfg).polys())
            oracle = "unknown" if st.verdict is None else st.verdict
            print(f"  {src:45s} qe={truth!s:5s} oracle={oracle}")


if __name__ == "__main__":
    main()
