#include "collabgeo/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "collabgeo/error.hpp"

namespace collabgeo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegree = kPi / 180.0;

inline double sq(double x) { return x * x; }

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw InvalidInput(std::string("non-finite ") + what);
    }
}

}  // namespace

GeoPoint::GeoPoint(double lat, double lon) {
    require_finite(lat, "latitude");
    require_finite(lon, "longitude");
    if (lat < -90.0 || lat > 90.0) {
        throw InvalidInput("latitude out of range: " + std::to_string(lat));
    }
    double l = std::remainder(lon, 360.0);  // [-180, 180]
    if (l == -180.0) l = 180.0;
    lat_ = lat;
    lon_ = l + 0.0;  // drop negative zero
}

Ellipsoid::Ellipsoid(double semi_major_km, double flattening)
    : a_(semi_major_km), f_(flattening) {
    if (!(std::isfinite(a_) && a_ > 0.0)) {
        throw InvalidInput("semi-major axis must be positive");
    }
    if (!(std::isfinite(f_) && f_ >= 0.0 && f_ < 1.0)) {
        throw InvalidInput("flattening must lie in [0, 1)");
    }
}

const Ellipsoid& Ellipsoid::wgs84() noexcept {
    static const Ellipsoid instance(kWgs84SemiMajorKm, kWgs84Flattening);
    return instance;
}

namespace detail {

double vincenty_inverse_km(double lat1, double lon1, double lat2, double lon2,
                           const Ellipsoid& e) {
    constexpr double kTolerance = 1e-12;
    constexpr int kMaxIterations = 200;

    const double a = e.semi_major_km();
    const double f = e.flattening();
    const double b = e.semi_minor_km();

    const double L = std::remainder(lon2 - lon1, 360.0) * kDegree;
    const double U1 = std::atan((1.0 - f) * std::tan(lat1 * kDegree));
    const double U2 = std::atan((1.0 - f) * std::tan(lat2 * kDegree));
    const double sinU1 = std::sin(U1), cosU1 = std::cos(U1);
    const double sinU2 = std::sin(U2), cosU2 = std::cos(U2);

    double lambda = L;
    double sin_sigma = 0, cos_sigma = 0, sigma = 0, cos2_alpha = 0, cos_2sigma_m = 0;
    bool converged = false;
    for (int it = 0; it < kMaxIterations; ++it) {
        const double sin_lambda = std::sin(lambda), cos_lambda = std::cos(lambda);
        sin_sigma = std::hypot(cosU2 * sin_lambda,
                               cosU1 * sinU2 - sinU1 * cosU2 * cos_lambda);
        if (sin_sigma == 0.0) return 0.0;  // coincident
        cos_sigma = sinU1 * sinU2 + cosU1 * cosU2 * cos_lambda;
        sigma = std::atan2(sin_sigma, cos_sigma);
        const double sin_alpha = cosU1 * cosU2 * sin_lambda / sin_sigma;
        cos2_alpha = 1.0 - sq(sin_alpha);
        cos_2sigma_m = cos2_alpha != 0.0 ? cos_sigma - 2.0 * sinU1 * sinU2 / cos2_alpha : 0.0;
        const double C = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        const double previous = lambda;
        lambda = L + (1.0 - C) * f * sin_alpha *
                         (sigma + C * sin_sigma *
                                      (cos_2sigma_m + C * cos_sigma * (-1.0 + 2.0 * sq(cos_2sigma_m))));
        if (!std::isfinite(lambda) || std::fabs(lambda) > kPi) return -1.0;
        if (std::fabs(lambda - previous) < kTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) return -1.0;

    const double u2 = cos2_alpha * (sq(a) - sq(b)) / sq(b);
    const double A = 1.0 + u2 / 16384.0 * (4096.0 + u2 * (-768.0 + u2 * (320.0 - 175.0 * u2)));
    const double B = u2 / 1024.0 * (256.0 + u2 * (-128.0 + u2 * (74.0 - 47.0 * u2)));
    const double delta_sigma =
        B * sin_sigma *
        (cos_2sigma_m +
         B / 4.0 *
             (cos_sigma * (-1.0 + 2.0 * sq(cos_2sigma_m)) -
              B / 6.0 * cos_2sigma_m * (-3.0 + 4.0 * sq(sin_sigma)) * (-3.0 + 4.0 * sq(cos_2sigma_m))));
    return b * A * (sigma - delta_sigma);
}

namespace {

// Series order 6 throughout, matching the double-precision configuration of
// the reference implementation.
constexpr int kOrder = 6;
constexpr int kNA3x = kOrder;
constexpr int kNC3x = (kOrder * (kOrder - 1)) / 2;

constexpr double kTol0 = std::numeric_limits<double>::epsilon();
const double kTol1 = 200.0 * kTol0;
const double kTol2 = std::sqrt(kTol0);
constexpr double kTolB = kTol0;
const double kXThresh = 1000.0 * kTol2;
const double kTiny = std::sqrt(std::numeric_limits<double>::min());
constexpr int kMaxIt1 = 20;
constexpr int kMaxIt2 = kMaxIt1 + std::numeric_limits<double>::digits + 10;

void norm2(double& s, double& c) {
    const double r = std::hypot(s, c);
    s /= r;
    c /= r;
}

double polyval(int n, const double* p, double x) {
    double y = n < 0 ? 0 : *p++;
    while (--n >= 0) y = y * x + *p++;
    return y;
}

double sum_error(double u, double v, double& t) {
    const double s = u + v;
    double up = s - v;
    double vpp = s - up;
    up -= u;
    vpp -= v;
    t = s != 0 ? 0.0 - (up + vpp) : s;
    return s;
}

double ang_round(double x) {
    constexpr double z = 1.0 / 16.0;
    double y = std::fabs(x);
    const double w = z - y;
    y = w > 0 ? z - w : y;
    return std::copysign(y, x);
}

double ang_diff(double x, double y, double& e) {
    double t;
    double d = sum_error(std::remainder(-x, 360.0), std::remainder(y, 360.0), t);
    d = sum_error(std::remainder(d, 360.0), t, t);
    if (d == 0 || std::fabs(d) == 180.0) d = std::copysign(d, t == 0 ? y - x : -t);
    e = t;
    return d;
}

void sincos_quadrant(double r, int q, double x, double& sinx, double& cosx) {
    const double s = std::sin(r), c = std::cos(r);
    switch (static_cast<unsigned>(q) & 3U) {
        case 0U: sinx = s; cosx = c; break;
        case 1U: sinx = c; cosx = -s; break;
        case 2U: sinx = -s; cosx = -c; break;
        default: sinx = -c; cosx = s; break;
    }
    cosx += 0.0;
    if (sinx == 0) sinx = std::copysign(sinx, x);
}

void sincosd(double x, double& sinx, double& cosx) {
    int q = 0;
    const double r = std::remquo(x, 90.0, &q) * kDegree;
    sincos_quadrant(r, q, x, sinx, cosx);
}

// sin/cos of x + t where t is a small correction.
void sincosde(double x, double t, double& sinx, double& cosx) {
    int q = 0;
    const double r = ang_round(std::remquo(x, 90.0, &q) + t) * kDegree;
    sincos_quadrant(r, q, x, sinx, cosx);
}

double sin_cos_series(bool sinp, double sinx, double cosx, const double* c, int n) {
    c += n + sinp;
    const double ar = 2 * (cosx - sinx) * (cosx + sinx);
    double y0 = (n & 1) ? *--c : 0, y1 = 0;
    n /= 2;
    while (n--) {
        y1 = ar * y0 - y1 + *--c;
        y0 = ar * y1 - y0 + *--c;
    }
    return sinp ? 2 * sinx * cosx * y0 : cosx * (y0 - y1);
}

double a1m1f(double eps) {
    static constexpr double coeff[] = {1, 4, 64, 0, 256};
    constexpr int m = kOrder / 2;
    const double t = polyval(m, coeff, sq(eps)) / coeff[m + 1];
    return (t + eps) / (1 - eps);
}

void c1f(double eps, double c[]) {
    static constexpr double coeff[] = {
        -1, 6, -16, 32,  //
        -9, 64, -128, 2048,  //
        9, -16, 768,  //
        3, -5, 512,  //
        -7, 1280,  //
        -7, 2048,
    };
    const double eps2 = sq(eps);
    double d = eps;
    int o = 0;
    for (int l = 1; l <= kOrder; ++l) {
        const int m = (kOrder - l) / 2;
        c[l] = d * polyval(m, coeff + o, eps2) / coeff[o + m + 1];
        o += m + 2;
        d *= eps;
    }
}

double a2m1f(double eps) {
    static constexpr double coeff[] = {-11, -28, -192, 0, 256};
    constexpr int m = kOrder / 2;
    const double t = polyval(m, coeff, sq(eps)) / coeff[m + 1];
    return (t - eps) / (1 + eps);
}

void c2f(double eps, double c[]) {
    static constexpr double coeff[] = {
        1, 2, 16, 32,  //
        35, 64, 384, 2048,  //
        15, 80, 768,  //
        7, 35, 512,  //
        63, 1280,  //
        77, 2048,
    };
    const double eps2 = sq(eps);
    double d = eps;
    int o = 0;
    for (int l = 1; l <= kOrder; ++l) {
        const int m = (kOrder - l) / 2;
        c[l] = d * polyval(m, coeff + o, eps2) / coeff[o + m + 1];
        o += m + 2;
        d *= eps;
    }
}

// Solves k^4 + 2k^3 - (x^2 + y^2 - 1)k^2 - 2y^2 k - y^2 = 0 for the positive root.
double astroid(double x, double y) {
    const double p = sq(x), q = sq(y), r = (p + q - 1) / 6;
    if (q == 0 && r <= 0) return 0;
    const double S = p * q / 4, r2 = sq(r), r3 = r * r2;
    const double disc = S * (S + 2 * r3);
    double u = r;
    if (disc >= 0) {
        double T3 = S + r3;
        T3 += T3 < 0 ? -std::sqrt(disc) : std::sqrt(disc);
        const double T = std::cbrt(T3);
        u += T + (T != 0 ? r2 / T : 0);
    } else {
        const double ang = std::atan2(std::sqrt(-disc), -(S + r3));
        u += 2 * r * std::cos(ang / 3);
    }
    const double v = std::sqrt(sq(u) + q);
    const double uv = u < 0 ? q / (v - u) : u + v;
    const double w = (uv - q) / (2 * v);
    return uv / (std::sqrt(uv + sq(w)) + w);
}

class KarneyInverse {
public:
    explicit KarneyInverse(const Ellipsoid& e)
        : a_(e.semi_major_km()),
          f_(e.flattening()),
          f1_(1 - f_),
          e2_(f_ * (2 - f_)),
          ep2_(e2_ / sq(f1_)),
          n_(f_ / (2 - f_)),
          b_(a_ * f1_),
          etol2_(0.1 * kTol2 / std::sqrt(std::max(0.001, std::fabs(f_)) *
                                         std::min(1.0, 1 - f_ / 2) / 2)) {
        a3_coeff();
        c3_coeff();
    }

    double distance(double lat1, double lon1, double lat2, double lon2) const;

private:
    struct LambdaState {
        double salp2, calp2, sig12, ssig1, csig1, ssig2, csig2, eps, dlam12;
    };

    void a3_coeff();
    void c3_coeff();
    double a3f(double eps) const { return polyval(kNA3x - 1, a3x_, eps); }
    void c3f(double eps, double c[]) const;
    void lengths(double eps, double sig12, double ssig1, double csig1, double dn1,
                 double ssig2, double csig2, double dn2, double* s12b,
                 double* m12b) const;
    double inverse_start(double sbet1, double cbet1, double dn1, double sbet2,
                         double cbet2, double dn2, double lam12, double slam12,
                         double clam12, double& salp1, double& calp1,
                         double& salp2, double& calp2, double& dnm) const;
    double lambda12(double sbet1, double cbet1, double dn1, double sbet2,
                    double cbet2, double dn2, double salp1, double calp1,
                    double slam120, double clam120, bool diffp,
                    LambdaState& st) const;

    double a_, f_, f1_, e2_, ep2_, n_, b_, etol2_;
    double a3x_[kNA3x]{};
    double c3x_[kNC3x]{};
};

void KarneyInverse::a3_coeff() {
    static constexpr double coeff[] = {
        -3, 128,  //
        -2, -3, 64,  //
        -1, -3, -1, 16,  //
        3, -1, -2, 8,  //
        1, -1, 2,  //
        1, 1,
    };
    int o = 0, k = 0;
    for (int j = kOrder - 1; j >= 0; --j) {
        const int m = std::min(kOrder - j - 1, j);
        a3x_[k++] = polyval(m, coeff + o, n_) / coeff[o + m + 1];
        o += m + 2;
    }
}

void KarneyInverse::c3_coeff() {
    static constexpr double coeff[] = {
        3, 128,  //
        2, 5, 128,  //
        -1, 3, 3, 64,  //
        -1, 0, 1, 8,  //
        -1, 1, 4,  //
        5, 256,  //
        1, 3, 128,  //
        -3, -2, 3, 64,  //
        1, -3, 2, 32,  //
        7, 512,  //
        -10, 9, 384,  //
        5, -9, 5, 192,  //
        7, 512,  //
        -14, 7, 512,  //
        21, 2560,
    };
    int o = 0, k = 0;
    for (int l = 1; l < kOrder; ++l) {
        for (int j = kOrder - 1; j >= l; --j) {
            const int m = std::min(kOrder - j - 1, j);
            c3x_[k++] = polyval(m, coeff + o, n_) / coeff[o + m + 1];
            o += m + 2;
        }
    }
}

void KarneyInverse::c3f(double eps, double c[]) const {
    double mult = 1;
    int o = 0;
    for (int l = 1; l < kOrder; ++l) {
        const int m = kOrder - l - 1;
        mult *= eps;
        c[l] = mult * polyval(m, c3x_ + o, eps);
        o += m + 1;
    }
}

void KarneyInverse::lengths(double eps, double sig12, double ssig1, double csig1,
                            double dn1, double ssig2, double csig2, double dn2,
                            double* s12b, double* m12b) const {
    double ca[kOrder + 1], cb[kOrder + 1];
    double a1 = a1m1f(eps);
    c1f(eps, ca);
    double a2 = 0, m0 = 0;
    if (m12b) {
        a2 = a2m1f(eps);
        c2f(eps, cb);
        m0 = a1 - a2;
        a2 = 1 + a2;
    }
    a1 = 1 + a1;
    const double b1 = sin_cos_series(true, ssig2, csig2, ca, kOrder) -
                      sin_cos_series(true, ssig1, csig1, ca, kOrder);
    if (s12b) *s12b = a1 * (sig12 + b1);
    if (m12b) {
        const double b2 = sin_cos_series(true, ssig2, csig2, cb, kOrder) -
                          sin_cos_series(true, ssig1, csig1, cb, kOrder);
        const double j12 = m0 * sig12 + (a1 * b1 - a2 * b2);
        *m12b = dn2 * (csig1 * ssig2) - dn1 * (ssig1 * csig2) - csig1 * csig2 * j12;
    }
}

double KarneyInverse::inverse_start(double sbet1, double cbet1, double dn1,
                                    double sbet2, double cbet2, double dn2,
                                    double lam12, double slam12, double clam12,
                                    double& salp1_out, double& calp1_out,
                                    double& salp2_out, double& calp2_out,
                                    double& dnm_out) const {
    (void)dn1;
    (void)dn2;
    double salp1 = 0, calp1 = 0, salp2 = 0, calp2 = 0, dnm = 0;
    double sig12 = -1;
    const double sbet12 = sbet2 * cbet1 - cbet2 * sbet1;
    const double cbet12 = cbet2 * cbet1 + sbet2 * sbet1;
    const double sbet12a = sbet2 * cbet1 + cbet2 * sbet1;
    const bool shortline = cbet12 >= 0 && sbet12 < 0.5 && cbet2 * lam12 < 0.5;
    double somg12, comg12;
    if (shortline) {
        double sbetm2 = sq(sbet1 + sbet2);
        sbetm2 /= sbetm2 + sq(cbet1 + cbet2);
        dnm = std::sqrt(1 + ep2_ * sbetm2);
        const double omg12 = lam12 / (f1_ * dnm);
        somg12 = std::sin(omg12);
        comg12 = std::cos(omg12);
    } else {
        somg12 = slam12;
        comg12 = clam12;
    }

    salp1 = cbet2 * somg12;
    calp1 = comg12 >= 0 ? sbet12 + cbet2 * sbet1 * sq(somg12) / (1 + comg12)
                        : sbet12a - cbet2 * sbet1 * sq(somg12) / (1 - comg12);

    const double ssig12 = std::hypot(salp1, calp1);
    const double csig12 = sbet1 * sbet2 + cbet1 * cbet2 * comg12;

    if (shortline && ssig12 < etol2_) {
        salp2 = cbet1 * somg12;
        calp2 = sbet12 - cbet1 * sbet2 * (comg12 >= 0 ? sq(somg12) / (1 + comg12) : 1 - comg12);
        norm2(salp2, calp2);
        sig12 = std::atan2(ssig12, csig12);
    } else if (std::fabs(n_) > 0.1 || csig12 >= 0 ||
               ssig12 >= 6 * std::fabs(n_) * kPi * sq(cbet1)) {
        // zeroth-order spherical estimate is good enough
    } else {
        // Near-antipodal: scale to the astroid coordinate system.
        const double lam12x = std::atan2(-slam12, -clam12);
        const double k2 = sq(sbet1) * ep2_;
        const double eps = k2 / (2 * (1 + std::sqrt(1 + k2)) + k2);
        const double lamscale = f_ * cbet1 * a3f(eps) * kPi;
        const double betscale = lamscale * cbet1;
        const double x = lam12x / lamscale;
        const double y = sbet12a / betscale;
        if (y > -kTol1 && x > -1 - kXThresh) {
            salp1 = std::min(1.0, -x);
            calp1 = -std::sqrt(1 - sq(salp1));
        } else {
            const double k = astroid(x, y);
            const double omg12a = lamscale * (-x * k / (1 + k));
            somg12 = std::sin(omg12a);
            comg12 = -std::cos(omg12a);
            salp1 = cbet2 * somg12;
            calp1 = sbet12a - cbet2 * sbet1 * sq(somg12) / (1 - comg12);
        }
    }
    if (!(salp1 <= 0)) {
        norm2(salp1, calp1);
    } else {
        salp1 = 1;
        calp1 = 0;
    }
    salp1_out = salp1;
    calp1_out = calp1;
    if (shortline) dnm_out = dnm;
    if (sig12 >= 0) {
        salp2_out = salp2;
        calp2_out = calp2;
    }
    return sig12;
}

double KarneyInverse::lambda12(double sbet1, double cbet1, double dn1, double sbet2,
                               double cbet2, double dn2, double salp1, double calp1,
                               double slam120, double clam120, bool diffp,
                               LambdaState& st) const {
    if (sbet1 == 0 && calp1 == 0) calp1 = -kTiny;

    const double salp0 = salp1 * cbet1;
    const double calp0 = std::hypot(calp1, salp1 * sbet1);

    double ssig1 = sbet1, csig1 = calp1 * cbet1;
    const double somg1 = salp0 * sbet1, comg1 = calp1 * cbet1;
    norm2(ssig1, csig1);

    const double salp2 = cbet2 != cbet1 ? salp0 / cbet2 : salp1;
    const double calp2 =
        cbet2 != cbet1 || std::fabs(sbet2) != -sbet1
            ? std::sqrt(sq(calp1 * cbet1) + (cbet1 < -sbet1 ? (cbet2 - cbet1) * (cbet1 + cbet2)
                                                            : (sbet1 - sbet2) * (sbet1 + sbet2))) /
                  cbet2
            : std::fabs(calp1);

    double ssig2 = sbet2, csig2 = calp2 * cbet2;
    const double somg2 = salp0 * sbet2, comg2 = calp2 * cbet2;
    norm2(ssig2, csig2);

    const double sig12 = std::atan2(std::max(0.0, csig1 * ssig2 - ssig1 * csig2) + 0.0,
                                    csig1 * csig2 + ssig1 * ssig2);
    const double somg12 = std::max(0.0, comg1 * somg2 - somg1 * comg2) + 0.0;
    const double comg12 = comg1 * comg2 + somg1 * somg2;
    const double eta = std::atan2(somg12 * clam120 - comg12 * slam120,
                                  comg12 * clam120 + somg12 * slam120);
    const double k2 = sq(calp0) * ep2_;
    const double eps = k2 / (2 * (1 + std::sqrt(1 + k2)) + k2);
    double c3[kOrder];
    c3f(eps, c3);
    const double b312 = sin_cos_series(true, ssig2, csig2, c3, kOrder - 1) -
                        sin_cos_series(true, ssig1, csig1, c3, kOrder - 1);
    const double domg12 = -f_ * a3f(eps) * salp0 * (sig12 + b312);
    const double lam12 = eta + domg12;

    double dlam12 = 0;
    if (diffp) {
        if (calp2 == 0) {
            dlam12 = -2 * f1_ * dn1 / sbet1;
        } else {
            lengths(eps, sig12, ssig1, csig1, dn1, ssig2, csig2, dn2, nullptr, &dlam12);
            dlam12 *= f1_ / (calp2 * cbet2);
        }
    }
    st = {salp2, calp2, sig12, ssig1, csig1, ssig2, csig2, eps, dlam12};
    return lam12;
}

double KarneyInverse::distance(double lat1, double lon1, double lat2, double lon2) const {
    double lon12s;
    double lon12 = ang_diff(lon1, lon2, lon12s);
    const double lonsign = std::signbit(lon12) ? -1 : 1;
    lon12 *= lonsign;
    lon12s *= lonsign;
    const double lam12 = lon12 * kDegree;
    double slam12, clam12;
    sincosde(lon12, lon12s, slam12, clam12);
    lon12s = (180.0 - lon12) - lon12s;

    lat1 = ang_round(lat1);
    lat2 = ang_round(lat2);
    if (std::fabs(lat1) < std::fabs(lat2)) std::swap(lat1, lat2);
    const double latsign = std::signbit(lat1) ? 1 : -1;
    lat1 *= latsign;
    lat2 *= latsign;

    double sbet1, cbet1, sbet2, cbet2;
    sincosd(lat1, sbet1, cbet1);
    sbet1 *= f1_;
    norm2(sbet1, cbet1);
    cbet1 = std::max(kTiny, cbet1);
    sincosd(lat2, sbet2, cbet2);
    sbet2 *= f1_;
    norm2(sbet2, cbet2);
    cbet2 = std::max(kTiny, cbet2);

    if (cbet1 < -sbet1) {
        if (cbet2 == cbet1) sbet2 = std::copysign(sbet1, sbet2);
    } else {
        if (std::fabs(sbet2) == -sbet1) cbet2 = cbet1;
    }

    const double dn1 = std::sqrt(1 + ep2_ * sq(sbet1));
    const double dn2 = std::sqrt(1 + ep2_ * sq(sbet2));

    double s12x = 0, m12x = 0, sig12 = 0;
    double salp1 = 0, calp1 = 0, salp2 = 0, calp2 = 0;
    bool meridian = lat1 == -90.0 || slam12 == 0;

    if (meridian) {
        calp1 = clam12;
        salp1 = slam12;
        calp2 = 1;
        salp2 = 0;
        const double ssig1 = sbet1, csig1 = calp1 * cbet1;
        const double ssig2 = sbet2, csig2 = calp2 * cbet2;
        sig12 = std::atan2(std::max(0.0, csig1 * ssig2 - ssig1 * csig2) + 0.0,
                           csig1 * csig2 + ssig1 * ssig2);
        lengths(n_, sig12, ssig1, csig1, dn1, ssig2, csig2, dn2, &s12x, &m12x);
        if (sig12 < 1 || m12x >= 0) {
            if (sig12 < 3 * kTiny || (sig12 < kTol0 && (s12x < 0 || m12x < 0))) {
                sig12 = m12x = s12x = 0;
            }
            s12x *= b_;
        } else {
            meridian = false;
        }
    }

    if (!meridian && sbet1 == 0 && (f_ <= 0 || lon12s >= f_ * 180.0)) {
        // along the equator
        s12x = a_ * lam12;
    } else if (!meridian) {
        double dnm = 0;
        sig12 = inverse_start(sbet1, cbet1, dn1, sbet2, cbet2, dn2, lam12, slam12, clam12,
                              salp1, calp1, salp2, calp2, dnm);
        if (sig12 >= 0) {
            s12x = sig12 * b_ * dnm;
        } else {
            LambdaState st{};
            double salp1a = kTiny, calp1a = 1, salp1b = kTiny, calp1b = -1;
            bool tripn = false, tripb = false;
            for (int numit = 0;; ++numit) {
                const double v = lambda12(sbet1, cbet1, dn1, sbet2, cbet2, dn2, salp1, calp1,
                                          slam12, clam12, numit < kMaxIt1, st);
                if (tripb || !(std::fabs(v) >= (tripn ? 8 : 1) * kTol0) || numit == kMaxIt2) break;
                if (v > 0 && (numit > kMaxIt1 || calp1 / salp1 > calp1b / salp1b)) {
                    salp1b = salp1;
                    calp1b = calp1;
                } else if (v < 0 && (numit > kMaxIt1 || calp1 / salp1 < calp1a / salp1a)) {
                    salp1a = salp1;
                    calp1a = calp1;
                }
                if (numit < kMaxIt1 && st.dlam12 > 0) {
                    const double dalp1 = -v / st.dlam12;
                    if (std::fabs(dalp1) < kPi) {
                        const double sdalp1 = std::sin(dalp1), cdalp1 = std::cos(dalp1);
                        const double nsalp1 = salp1 * cdalp1 + calp1 * sdalp1;
                        if (nsalp1 > 0) {
                            calp1 = calp1 * cdalp1 - salp1 * sdalp1;
                            salp1 = nsalp1;
                            norm2(salp1, calp1);
                            tripn = std::fabs(v) <= 16 * kTol0;
                            continue;
                        }
                    }
                }
                // Newton step unusable: bisect the bracket.
                salp1 = (salp1a + salp1b) / 2;
                calp1 = (calp1a + calp1b) / 2;
                norm2(salp1, calp1);
                tripn = false;
                tripb = std::fabs(salp1a - salp1) + (calp1a - calp1) < kTolB ||
                        std::fabs(salp1 - salp1b) + (calp1 - calp1b) < kTolB;
            }
            lengths(st.eps, st.sig12, st.ssig1, st.csig1, dn1, st.ssig2, st.csig2, dn2, &s12x,
                    nullptr);
            s12x *= b_;
        }
    }
    return 0.0 + s12x;
}

}  // namespace

double karney_inverse_km(double lat1, double lon1, double lat2, double lon2,
                         const Ellipsoid& e) {
    return KarneyInverse(e).distance(lat1, lon1, lat2, lon2);
}

}  // namespace detail

double geodesic_distance(const GeoPoint& a, const GeoPoint& b, const Ellipsoid& e) {
    if (a == b) return 0.0;
    const GeoPoint& p = a < b ? a : b;
    const GeoPoint& q = a < b ? b : a;
    const double v = detail::vincenty_inverse_km(p.lat(), p.lon(), q.lat(), q.lon(), e);
    if (v >= 0.0) return v;
    return detail::karney_inverse_km(p.lat(), p.lon(), q.lat(), q.lon(), e);
}

double great_circle_distance(const GeoPoint& a, const GeoPoint& b, double radius_km) {
    if (!(std::isfinite(radius_km) && radius_km > 0.0)) {
        throw InvalidInput("sphere radius must be positive");
    }
    if (a == b) return 0.0;
    const GeoPoint& p = a < b ? a : b;
    const GeoPoint& q = a < b ? b : a;
    const double phi1 = p.lat() * kDegree, phi2 = q.lat() * kDegree;
    const double dphi = phi2 - phi1;
    const double dlambda = std::remainder(q.lon() - p.lon(), 360.0) * kDegree;
    const double h = sq(std::sin(dphi / 2)) + std::cos(phi1) * std::cos(phi2) * sq(std::sin(dlambda / 2));
    return 2.0 * radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

double distance_km(const GeoPoint& a, const GeoPoint& b, DistanceMode mode, const Ellipsoid& e) {
    return mode == DistanceMode::Geodesic ? geodesic_distance(a, b, e)
                                          : great_circle_distance(a, b, kMeanEarthRadiusKm);
}

}  // namespace collabgeo
