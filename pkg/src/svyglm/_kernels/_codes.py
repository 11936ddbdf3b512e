"""Integer codes shared by the compiled and fallback kernels."""

FAMILY_CODES = {
    "normal": 0,
    "poisson": 1,
    "binomial": 2,
    "gamma": 3,
    "negative_binomial": 4,
    "inverse_gaussian": 5,
}

LINK_CODES = {
    "identity": 0,
    "log": 1,
    "logit": 2,
    "inverse": 3,
}
