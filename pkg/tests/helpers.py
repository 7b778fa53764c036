"""Shared test utilities."""

from treepolymer.environment import CriticalPoint, cgf, cgf_d1, cgf_d2


def tilt_point(model, beta):
    """CriticalPoint-shaped bundle evaluated at an arbitrary beta.

    Symmetric two-point noise has no finite critical point (its criticality
    residual stays negative for every finite beta), but the cascade/spine
    machinery is parametric in the stored values, and identities such as
    normalization of the tilted law, E[W_1] = 1 for symmetric noise, and the
    many-to-one transfer hold at any beta.  This lets those identities be
    tested for the two-point noise without pretending a finite critical
    point exists.
    """
    lam = cgf(model, beta)
    lam1 = cgf_d1(model, beta)
    lam2 = cgf_d2(model, beta)
    return CriticalPoint(beta_c=beta, lambda_c=lam, lambda_prime_c=lam1,
                         lambda_second_c=lam2, sigma_sq=beta * beta * lam2)
