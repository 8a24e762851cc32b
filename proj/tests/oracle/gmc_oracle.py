"""Quadrature oracle for the annulus second moment of the chaos mass.

E[M(A)^2] = int_A int_A e^{g^2 G(x,y)} |x|_+^{-4} |y|_+^{-4}, A = {1 <= |x| <= 2},
G(x,y) = ln 1/|x-y| + ln|x|_+ + ln|y|_+. The angular integral is
int_0^{2pi} (a - b cos phi)^{-nu} dphi = 2 pi a^{-nu} 2F1(nu/2, (nu+1)/2; 1; (b/a)^2),
which is finite but not smooth on the diagonal r1 = r2; the substitution
r2 = r1 -+ d v^4 moves the kink into a smooth endpoint. Gauss-Legendre, node doubling.
"""
import numpy as np
from scipy import special


def annulus_second_moment(g, n):
    g2 = g * g
    nu = g2 / 2
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    r1 = 1 + x[:, None]
    tot = 0.0
    for side in (-1, 1):
        d = (r1 - 1) if side < 0 else (2 - r1)
        v = x[None, :]
        r2 = r1 + side * d * v ** 4
        jac = d * 4 * v ** 3
        a, b = r1 * r1 + r2 * r2, 2 * r1 * r2
        z = np.minimum((b / a) ** 2, 1.0)
        ang = 2 * np.pi * a ** -nu * special.hyp2f1(nu / 2, (nu + 1) / 2, 1.0, z)
        f = r1 ** (g2 - 3) * r2 ** (g2 - 3) * ang * jac
        tot += np.sum(w[:, None] * w[None, :] * f)
    return 2 * np.pi * tot


if __name__ == "__main__":
    for n in (100, 200, 400, 800):
        print(n, "annulus_second_moment(0.5) = %.15g" % annulus_second_moment(0.5, n))
    print("gamma=0 check %.15g vs %.15g" % (annulus_second_moment(0.0, 200), (2 * np.pi * 3 / 8) ** 2))
