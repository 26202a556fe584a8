"""Independent reference values for the surface and functional tests.

Everything is evaluated at 40 digits. Surfaces without a closed form are
integrated directly from their parametrization: derivatives by central
differences (step 1e-10, error near 1e-20), periodic directions by the trapezoid rule, the polar direction of the
perturbed spheres by Gauss-Legendre in cos(theta).

    python3 reference_values.py > reference_values.txt
"""

import mpmath as mp

mp.mp.dps = 40
STEP = mp.mpf("1e-10")
PI = mp.pi


def out(name, value):
    print(f"{name} = {mp.nstr(value, 20)}", flush=True)


def dot(k, a, b):
    # ambient form: Minkowski for k = -1, Euclidean for k = +1
    s = -a[0] * b[0] if k < 0 else a[0] * b[0]
    return s + sum(x * y for x, y in zip(a[1:], b[1:]))


def jet(f, u, v):
    h = STEP
    at = lambda du, dv: f(u + du * h, v + dv * h)
    c, pu, mu, pv, mv = at(0, 0), at(1, 0), at(-1, 0), at(0, 1), at(0, -1)
    pp, pm, mp_, mm = at(1, 1), at(1, -1), at(-1, 1), at(-1, -1)
    comb = lambda terms, scale: [sum(w * t[i] for w, t in terms) / scale for i in range(4)]
    return [
        c,
        comb([(1, pu), (-1, mu)], 2 * h),
        comb([(1, pv), (-1, mv)], 2 * h),
        comb([(1, pu), (-2, c), (1, mu)], h * h),
        comb([(1, pp), (-1, pm), (-1, mp_), (1, mm)], 4 * h * h),
        comb([(1, pv), (-2, c), (1, mv)], h * h),
    ]


def local(k, f, u, v):
    """(area element, |H|^2) at (u, v)."""
    F, Fu, Fv, Fuu, Fuv, Fvv = jet(f, u, v)
    E, G, M = dot(k, Fu, Fu), dot(k, Fv, Fv), dot(k, Fu, Fv)
    det = E * G - M * M
    gi = [[G / det, -M / det], [-M / det, E / det]]
    lap = [gi[0][0] * a + 2 * gi[0][1] * b + gi[1][1] * c for a, b, c in zip(Fuu, Fuv, Fvv)]
    # remove the components along F (normal to the model) and the tangent plane
    basis = [F, Fu, Fv]
    gram = mp.matrix([[dot(k, a, b) for b in basis] for a in basis])
    rhs = mp.matrix([dot(k, lap, a) for a in basis])
    c = mp.lu_solve(gram, rhs)
    h = [lap[i] - sum(c[j] * basis[j][i] for j in range(3)) for i in range(4)]
    return mp.sqrt(det), dot(k, h, h)


def torus_h3(core, tube):
    ca, sa, cr, sr = mp.cosh(tube), mp.sinh(tube), mp.cosh(core), mp.sinh(core)

    def f(u, v):
        su = mp.sin(u)
        p2 = su * sa * cr + ca * sr
        return [su * sa * sr + ca * cr, mp.cos(u) * sa, p2 * mp.cos(v), p2 * mp.sin(v)]

    return f


def perturbed(k, radius, amp, freq):
    def f(theta, phi):
        p = [mp.sin(theta) * mp.cos(phi), mp.sin(theta) * mp.sin(phi), mp.cos(theta)]
        r = radius * (1 + amp * mp.cos(freq * p[0]) * mp.cos(freq * p[1]) * mp.cos(freq * p[2]))
        c, s = (mp.cosh(r), mp.sinh(r)) if k < 0 else (mp.cos(r), mp.sin(r))
        return [c, s * p[0], s * p[1], s * p[2]]

    return f


def rotation_surface_integrals(k, f, n):
    # integrand independent of v: 2π × trapezoid in u
    area = will = 0
    for j in range(n):
        da, h2 = local(k, f, 2 * PI * j / n, mp.mpf(0))
        area += da
        will += h2 * da
    w = 2 * PI / n * 2 * PI
    return area * w, will * w / 4


def polar_integrals(k, f, degree, n_phi):
    nodes = mp.calculus.quadrature.GaussLegendre(mp.mp)
    # Gauss-Legendre in x = cos(theta) on [-1, 1]; degree d gives 3 * 2^(d-1) nodes
    xs, ws = zip(*nodes.calc_nodes(degree, mp.mp.prec))
    area = will = 0
    for x, wx in zip(xs, ws):
        theta = mp.acos(x)
        for j in range(n_phi):
            da, h2 = local(k, f, theta, 2 * PI * j / n_phi)
            # dA = da dθ dφ, dθ = dx / sin θ
            area += wx * da / mp.sin(theta)
            will += wx * h2 * da / mp.sin(theta)
    return area * 2 * PI / n_phi, will * 2 * PI / n_phi / 4


# Radial weights and the weight identity 2φV + φ′sn = −K.
for r in [mp.mpf("0.5"), mp.mpf(1), mp.mpf(2)]:
    w = mp.cosh(r) - 1
    out(f"h3.w.{r}", w)
    out(f"h3.phi.{r}", 1 / w)
    out(f"h3.phi_prime.{r}", -mp.sinh(r) / w**2)
for r in [mp.mpf("0.5"), mp.mpf(1), mp.mpf(2)]:
    w = 1 - mp.cos(r)
    out(f"s3.phi.{r}", 1 / w)

# Geodesic spheres.
for t in ["0.5", "1", "2"]:
    t = mp.mpf(t)
    out(f"sphere_h3.{mp.nstr(t, 3)}.area", 4 * PI * mp.sinh(t) ** 2)
    out(f"sphere_h3.{mp.nstr(t, 3)}.quarter_willmore", 4 * PI * mp.cosh(t) ** 2)
    out(f"sphere_h3.{mp.nstr(t, 3)}.mean_curvature", 2 * mp.coth(t))
for name, t in [("pi/6", PI / 6), ("pi/4", PI / 4), ("pi/3", PI / 3)]:
    out(f"sphere_s3.{name}.area", 4 * PI * mp.sin(t) ** 2)
    out(f"sphere_s3.{name}.quarter_willmore", 4 * PI * mp.cos(t) ** 2)

# Ball of radius ρ about a point of the ℍ³ sphere t = 1 cuts a cap of polar
# angle θ with cosh ρ = cosh² t − sinh² t cos θ.
t = mp.mpf(1)
for rho in ["0.3", "0.9", "1.7"]:
    ct = (mp.cosh(t) ** 2 - mp.cosh(mp.mpf(rho))) / mp.sinh(t) ** 2
    out(f"sphere_h3.1.ball_area.{rho}", 2 * PI * mp.sinh(t) ** 2 * (1 - ct))

# 𝕊³ sphere t = π/3 with o on it, ρ = 1: both sides of the finer bound with
# the single weight φ(ρ): 4π − |Σ_ρ| and φ(ρ)∫_{Σ_ρ}cos r + ¼∫|H|².
t, rho = PI / 3, mp.mpf(1)
ct = (mp.cos(rho) - mp.cos(t) ** 2) / mp.sin(t) ** 2
cap = 2 * PI * mp.sin(t) ** 2 * (1 - ct)
cos_int = mp.quad(lambda c: (mp.cos(t) ** 2 + mp.sin(t) ** 2 * c) * 2 * PI * mp.sin(t) ** 2, [ct, 1])
out("sphere_s3.pi/3.rho1.lhs", 4 * PI - cap)
out("sphere_s3.pi/3.rho1.single_weight_rhs", cos_int / (1 - mp.cos(rho)) + 4 * PI * mp.cos(t) ** 2)

# Clifford-type torus in 𝕊³.
a = mp.mpf("0.6")
h = mp.cot(a) - mp.tan(a)
area = 4 * PI**2 * mp.sin(a) * mp.cos(a)
out("clifford_s3.0.6.area", area)
out("clifford_s3.0.6.quarter_willmore", h * h * area / 4)

# Tori of revolution in ℍ³ (no closed form).
for core, tube in [("1", "0.6"), ("1", "0.4")]:
    area, will = rotation_surface_integrals(-1, torus_h3(mp.mpf(core), mp.mpf(tube)), 64)
    out(f"torus_h3.{core}_{tube}.area", area)
    out(f"torus_h3.{core}_{tube}.quarter_willmore", will)

# Perturbed spheres r = t(1 + ε cos(m p₁) cos(m p₂) cos(m p₃)).
for k, name, radius in [(-1, "perturbed_h3", "1"), (1, "perturbed_s3", "0.8")]:
    f = perturbed(k, mp.mpf(radius), mp.mpf("0.1"), 2)
    area, will = polar_integrals(k, f, 6, 128)
    coarse_area, coarse_will = polar_integrals(k, f, 5, 64)
    print(f"# {name}: change from 48 x 64 to 96 x 128 nodes {mp.nstr(abs(area - coarse_area), 3)} (area), "
          f"{mp.nstr(abs(will - coarse_will), 3)} (quarter willmore)", flush=True)
    out(f"{name}.area", area)
    out(f"{name}.quarter_willmore", will)
