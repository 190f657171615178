"""Mittag-Leffler reference values from the power series at 200 digits.

Generated by ``make_ml_oracle.py``; each row is ``(delta, rho, z, E_{delta,rho}(z))``.
"""

ML_ORACLE = [
    (0.2, 1.0, -2.059366, 2.9940940961665425433e-1),
    (0.3, 1.5, 0.047608, 1.1817506701203242628),
    (0.4, 1.0, 2.560892, 9.0326313327003157345e+4),
    (0.5, 2.0, -11.389677, 9.1742103009824384796e-2),
    (0.6, 1.0, -26.063157, 1.7539614283150035874e-2),
    (0.7, 2.0, -11.802026, 8.9544176445321607009e-2),
    (0.8, 1.0, 2.769244, 4.4444087742776490256e+1),
    (0.9, 2.0, -7.442957, 1.3651436170028341809e-1),
    (1.0, 1.0, -23.149787, 8.8343631710862103146e-11),
    (0.2, 2.0, 0.691743, 2.5616861440867705293),
    (0.3, 1.0, 1.908506, 1.8521379514954739294e+4),
    (0.4, 1.5, -5.556062, 1.6623002030501755971e-1),
    (0.5, 1.0, 0.347451, 1.5534988384977550757),
    (0.6, 0.5, -0.355324, 2.9846778271144039733e-1),
    (0.7, 1.0, -9.195441, 3.9599460730661670172e-2),
    (0.8, 0.8, -24.509424, 3.2214551273797862347e-4),
    (0.9, 1.0, 2.682948, 2.2155874023592140003e+1),
    (1.0, 1.5, -25.516337, 2.2572571894377090186e-2),
    (0.2, 1.0, 2.072962, 2.1046505812703715826e+17),
    (0.3, 1.5, 3.010001, 6.6938283287127116921e+16),
    (0.4, 1.0, -4.678763, 1.3243016891898378152e-1),
    (0.5, 0.5, -11.106592, 2.2595681914853381009e-3),
    (0.6, 1.0, -5.728234, 8.269574962333044633e-2),
    (0.7, 2.0, -28.089426, 3.8812701434271128295e-2),
    (0.8, 1.0, -18.734647, 1.2458278981915137363e-2),
    (0.9, 1.5, 2.310234, 8.549356184613394331),
    (1.0, 1.0, -24.842892, 1.6250588376884704344e-11),
    (0.2, 0.2, -1.88313, 2.3434972520083242565e-2),
    (0.3, 1.0, -1.087974, 4.3495546882589472104e-1),
    (0.4, 2.0, -1.710228, 4.0730669377672332604e-1),
    (0.5, 1.0, -16.00202, 3.5188952405480995424e-2),
    (0.6, 2.0, -12.440969, 8.5167383076138835796e-2),
    (0.7, 1.0, -12.789648, 2.7812392309397733825e-2),
    (0.8, 0.8, -14.85718, 9.4178636646954399806e-4),
    (0.9, 1.0, -11.409337, 1.091367803046861062e-2),
    (1.0, 0.5, -17.252402, -1.8037467881283959674e-2),
    (0.2, 1.0, -1.349303, 3.9642736166942508912e-1),
    (0.3, 0.3, 0.516038, 1.2301918479857673196),
    (0.4, 1.0, 0.430765, 1.7917067029518870881),
    (0.5, 2.0, 2.228429, 5.7014173589661048083e+1),
    (0.6, 1.0, -6.415555, 7.3579940064512434153e-2),
    (0.7, 2.0, -16.902785, 6.3553376696924817318e-2),
    (0.8, 1.0, -19.234381, 1.2111978463653565551e-2),
    (0.9, 0.9, -28.798658, 1.2899935202142790768e-4),
    (1.0, 1.0, -28.393415, 4.6654822675443115766e-13),
    (0.2, 0.5, 0.609965, 1.9990790181253200264),
    (0.3, 1.0, -2.393351, 2.5342947687875267792e-1),
    (0.4, 1.5, -2.858066, 2.8799017349802273318e-1),
    (0.5, 1.0, 3.841088, 5.1120148320806376423e+6),
    (0.6, 0.5, -24.363956, -3.426505721452792349e-3),
]
