#!/usr/bin/env python3
"""Regenerates reference_values.hpp from scipy / statsmodels / scikit-learn.

The C++ tests never call Python; they compare against the frozen header.
Run from this directory:  python3 make_reference_values.py > reference_values.hpp
"""

import numpy as np
import scipy
import scipy.stats as st
import sklearn
import statsmodels
from scipy.special import boxcox
from sklearn.cross_decomposition import PLSRegression
from statsmodels.stats.diagnostic import het_breuschpagan
from statsmodels.stats.stattools import durbin_watson


def arr(name, values):
    body = ", ".join(repr(float(v)) for v in np.ravel(values))
    return f"inline constexpr double {name}[] = {{{body}}};"


def scalar(name, value):
    return f"inline constexpr double {name} = {float(value)!r};"


out = []
emit = out.append

emit("// Generated by make_reference_values.py; do not edit by hand.")
emit(f"// scipy {scipy.__version__}, statsmodels {statsmodels.__version__}, "
     f"scikit-learn {sklearn.__version__}, numpy {np.__version__}")
emit("#pragma once")
emit("")
emit("namespace oracle {")
emit("")

# --- Shapiro-Wilk -----------------------------------------------------------
# Classic 11-observation body-weight sample from Shapiro and Wilk (1965).
weights = np.array([148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236], dtype=float)
w, p = st.shapiro(weights)
emit(arr("kSwWeights", weights))
emit(scalar("kSwWeightsW", w))
emit(scalar("kSwWeightsP", p))

rng = np.random.default_rng(20240501)
for n in (3, 7, 20, 50, 200):
    x = np.round(rng.normal(10.0, 2.0, n), 6)
    w, p = st.shapiro(x)
    emit(arr(f"kSwNormal{n}", x))
    emit(scalar(f"kSwNormal{n}W", w))
    emit(scalar(f"kSwNormal{n}P", p))
x = np.round(rng.exponential(1.0, 40), 6)
w, p = st.shapiro(x)
emit(arr("kSwExp40", x))
emit(scalar("kSwExp40W", w))
emit(scalar("kSwExp40P", p))

# --- Breusch-Pagan (n R^2 form) ------------------------------------------------
n = 60
xb = np.round(rng.uniform(0.0, 1.0, n), 6)
homo = np.round(rng.normal(0.0, 1.0, n), 6)
hetero = np.round(rng.normal(0.0, 1.0, n) * (0.1 + 2.0 * xb), 6)
exog = np.column_stack([np.ones(n), xb])
lm_h, p_h, _, _ = het_breuschpagan(homo, exog, robust=True)
lm_x, p_x, _, _ = het_breuschpagan(hetero, exog, robust=True)
emit(arr("kBpX", xb))
emit(arr("kBpHomoResid", homo))
emit(arr("kBpHeteroResid", hetero))
emit(scalar("kBpHomoLm", lm_h))
emit(scalar("kBpHomoP", p_h))
emit(scalar("kBpHeteroLm", lm_x))
emit(scalar("kBpHeteroP", p_x))

# --- Durbin-Watson -------------------------------------------------------------
e = np.round(rng.normal(0.0, 1.0, 30), 6)
emit(arr("kDwResid", e))
emit(scalar("kDwValue", durbin_watson(e)))

# --- correlations ----------------------------------------------------------------
a = np.round(rng.normal(0.0, 1.0, 25), 3)
b = np.round(a + rng.normal(0.0, 0.8, 25), 3)
b[3] = b[7]  # a tie in y
emit(arr("kCorrX", a))
emit(arr("kCorrY", b))
emit(scalar("kCorrPearson", st.pearsonr(a, b).statistic))
emit(scalar("kCorrSpearman", st.spearmanr(a, b).statistic))
emit(scalar("kCorrXi", st.chatterjeexi(a, b).statistic))

# --- least squares ------------------------------------------------------------------
n, p = 40, 3
xo = np.round(rng.normal(0.0, 1.0, (n, p)), 6)
yo = np.round(0.3 + xo @ np.array([0.5, -0.2, 0.1]) + rng.normal(0.0, 0.05, n), 6)
design = np.column_stack([np.ones(n), xo])
coef, *_ = np.linalg.lstsq(design, yo, rcond=None)
emit(arr("kOlsX", xo))
emit(arr("kOlsY", yo))
emit(scalar("kOlsBias", coef[0]))
emit(arr("kOlsWeights", coef[1:]))

# PLS with one component via NIPALS, unscaled, expressed on raw inputs.
pls = PLSRegression(n_components=1, scale=False).fit(xo, yo)
pls_pred = pls.predict(xo[:5]).ravel()
emit(arr("kPls1Pred", pls_pred))
pls2 = PLSRegression(n_components=2, scale=False).fit(xo, yo)
emit(arr("kPls2Pred", pls2.predict(xo[:5]).ravel()))

# --- principal directions ---------------------------------------------------------------
cov = np.cov(xo, rowvar=False)
vals, vecs = np.linalg.eigh(cov)
lead = vecs[:, -1]
first = next(i for i, v in enumerate(lead) if abs(v) > 1e-12)
if lead[first] < 0:
    lead = -lead
emit(scalar("kPcaLeadEigenvalue", vals[-1]))
emit(arr("kPcaLeadComponent", lead))

# --- Box-Cox -----------------------------------------------------------------------------
v = np.array([0.5, 1.0, 2.0, 3.5])
for lam, tag in ((0.0, "0"), (0.5, "Half"), (2.0, "2")):
    emit(arr(f"kBoxCox{tag}", boxcox(v, lam)))
emit(arr("kBoxCoxInput", v))

emit("")
emit("}  // namespace oracle")
print("\n".join(out))
