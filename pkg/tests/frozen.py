"""Frozen reference values, produced once by the oracles in ``oracles.py`` (scipy 1.15)."""

BESSEL_ZEROS = {
    -0.3: [1.9228540150659374, 5.042125633579602, 8.17785151853987, 11.316775027003969, 14.456846522464264],
    0.7: [3.42189015386347, 6.579296491388886, 9.726660880194059, 12.87123334139267, 16.01464326716129],
    -0.25: [2.0062996717894506, 5.123062742746345, 8.257951175641898, 11.396467696986598, 14.536299884337861],
    0.75: [3.491008374108422, 6.652635523121829, 9.80161235913985, 12.947034889138836, 16.090969528199363],
}

BESSEL_VALUES = [(0.7, 3.3, 0.053158460442600586), (-0.3, 15.0, -0.10649162798247619),
                 (0.25, 40.0, 0.054911752342599734)]

# E_r(z) from a 200-term series
MITTAG_LEFFLER = [(0.9, 0.5, 1.704308722099399), (0.9, -0.5, 0.6034054986958611),
                  (0.9, 1.0, 2.9749390749704476), (0.5, -1.0, 0.42758357615580717)]

# at H = 1/2 the fBM series reduces to the cosine series of BM, whose weights
# give the constant 2/pi in the normalisation used by fbm_constant
FBM_CONSTANT_HALF = 0.6366197723675814
