"""Published values used for consistency checks.

None of these feed the analysis pipelines; they exist so that ratios
between quoted results can be tested against the model.
"""

# Collapse rate (s^-1)
FU_LAMBDA_LIMIT = 0.55e-16  # single 11 keV point, Ge slab
LAMBDA_LIMIT_NON_MASS_PROPORTIONAL = 1.4e-17
LAMBDA_LIMIT_MASS_PROPORTIONAL = 4.7e-11
LAMBDA_QMSL = 1e-16
LAMBDA_CSL = 2.2e-17

# 1/E fit of the IGEX spectrum over 4.5-48.5 keV
IGEX_ALPHA = 110.0
IGEX_ALPHA_ERROR = 7.0
IGEX_REDUCED_CHI2 = 1.1

# Pauli-principle violation probability beta^2/2
RAMBERG_SNOW_BETA2_LIMIT = 1.7e-26
VIP_BETA2_LIMIT = 4.7e-29

VIP_CURRENT_AMP = 40.0
