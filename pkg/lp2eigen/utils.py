from math import comb, gamma, pi


def binomial_ones(n, k):
    """The value of sigma_k at the all-ones spectrum of length `n`.

    Examples
    --------
    >>> binomial_ones(2, 1)
    2
    >>> binomial_ones(3, 2)
    3
    """
    return comb(n, k)


def sphere_area(n):
    """Surface measure of the unit sphere S^n embedded in R^{n+1}.

    Examples
    --------
    >>> round(sphere_area(1), 12) == round(2 * pi, 12)
    True
    >>> round(sphere_area(2), 12) == round(4 * pi, 12)
    True
    """
    return 2 * pi ** ((n + 1) / 2) / gamma((n + 1) / 2)


def unit_ball_volume(n):
    """Volume of the unit ball enclosed by S^n."""
    return sphere_area(n) / (n + 1)
