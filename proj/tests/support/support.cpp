#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <unistd.h>

#include "signseq/ingest.hpp"
#include "signseq/labels.hpp"
#include "signseq/lmk_io.hpp"

namespace testsupport {

using namespace signseq;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double gaussian(std::mt19937_64& rng) {
    double u = uniform(rng, 0.0, 1.0);
    while (u <= 0.0) u = uniform(rng, 0.0, 1.0);
    const double v = uniform(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

TempDir::TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("signseq_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

LandmarkFrame random_frame(std::mt19937_64& rng, double missing_hand_rate) {
    LandmarkFrame f;
    for (auto& p : f.points) p = {uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95), uniform(rng, -0.4, 0.4)};
    for (std::size_t begin : {kLeftHandBegin, kRightHandBegin})
        if (uniform(rng, 0.0, 1.0) < missing_hand_rate)
            for (std::size_t i = 0; i < kHandCount; ++i) f[begin + i] = {};
    return f;
}

TrialSequence random_trial(std::mt19937_64& rng, std::size_t frames, double missing_hand_rate) {
    TrialSequence t;
    for (std::size_t i = 0; i < frames; ++i) t.frames.push_back(random_frame(rng, missing_hand_rate));
    return t;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Left/right pairs of the pose topology.
constexpr std::pair<std::size_t, std::size_t> kPosePairs[] = {
    {1, 4}, {2, 5}, {3, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16},
    {17, 18}, {19, 20}, {21, 22}, {23, 24}, {25, 26}, {27, 28}, {29, 30}, {31, 32}};

void put_hand(LandmarkFrame& f, std::size_t begin, double wx, double wy, double wd, double spread, double twist) {
    f[begin] = {wx, wy, wd};
    for (std::size_t j = 1; j < kHandCount; ++j) {
        const double finger = static_cast<double>((j - 1) / 4);
        const double joint = static_cast<double>((j - 1) % 4 + 1);
        const double ang = -kPi / 2 + (finger - 2.0) * 0.35 + twist;
        f[begin + j] = {wx + spread * joint * std::cos(ang), wy + spread * joint * std::sin(ang),
                        wd - 0.005 * joint};
    }
}

LandmarkFrame mirrored(const LandmarkFrame& in, double cx) {
    LandmarkFrame f = in;
    auto mirror = [cx](LandmarkPoint p) {
        if (!p.missing()) p.x = 2.0 * cx - p.x;
        return p;
    };
    for (auto& p : f.points) p = mirror(p);
    for (auto [l, r] : kPosePairs) std::swap(f[l], f[r]);
    for (std::size_t i = 0; i < kHandCount; ++i) std::swap(f[kLeftHandBegin + i], f[kRightHandBegin + i]);
    return f;
}

}  // namespace

TrialSequence synthetic_sign(const SignOptions& opt) {
    std::mt19937_64 rng(opt.seed * 1000003ULL + static_cast<std::uint64_t>(opt.signer) * 7919ULL +
                        static_cast<std::uint64_t>(opt.word_class) * 131ULL +
                        static_cast<std::uint64_t>(opt.trial_index));
    TrialSequence t;
    t.signer = opt.signer;
    t.word_class = opt.word_class;
    t.trial_index = opt.trial_index;
    t.dominance = opt.dominance;

    // Each signer stands somewhere else in the picture.
    const double cx = 0.5 + 0.03 * std::sin(opt.signer * 1.7);
    const double cy = 0.55 + 0.02 * std::cos(opt.signer * 2.3);
    const double k = static_cast<double>(opt.word_class);
    const double theta = 2.0 * kPi * k / std::max(1, opt.class_count);
    const double radius = 0.07 + 0.02 * static_cast<double>(opt.word_class % 2);
    const double turn = opt.word_class % 3 == 0 ? 1.0 : -1.0;
    auto jitter = [&] { return opt.noise * gaussian(rng); };

    for (std::size_t i = 0; i < opt.frames; ++i) {
        const double s = opt.frames > 1 ? static_cast<double>(i) / static_cast<double>(opt.frames - 1) : 0.0;
        LandmarkFrame f;
        f[pose::Nose] = {cx + jitter(), cy - 0.2 + jitter(), -0.5};
        for (std::size_t p = 1; p <= 10; ++p)
            f[p] = {cx + 0.01 * static_cast<double>(p % 5) * (p <= 3 || p == 7 || p == 9 ? 1.0 : -1.0),
                    cy - 0.22 + 0.005 * static_cast<double>(p), -0.45};
        f[pose::LeftShoulder] = {cx + 0.09 + jitter(), cy + jitter(), -0.2};
        f[pose::RightShoulder] = {cx - 0.09 + jitter(), cy + jitter(), -0.2};
        f[pose::LeftHip] = {cx + 0.06, cy + 0.3, 0.0};
        f[pose::RightHip] = {cx - 0.06, cy + 0.3, 0.0};
        f[pose::LeftKnee] = {cx + 0.06, cy + 0.5, 0.05};
        f[pose::RightKnee] = {cx - 0.06, cy + 0.5, 0.05};
        f[pose::LeftAnkle] = {cx + 0.06, cy + 0.7, 0.1};
        f[pose::RightAnkle] = {cx - 0.06, cy + 0.7, 0.1};
        f[pose::LeftHeel] = {cx + 0.065, cy + 0.72, 0.12};
        f[pose::RightHeel] = {cx - 0.065, cy + 0.72, 0.12};
        f[pose::LeftFootIndex] = {cx + 0.07, cy + 0.74, 0.05};
        f[pose::RightFootIndex] = {cx - 0.07, cy + 0.74, 0.05};
        for (std::size_t j = 0; j < kFaceCount; ++j) {
            const double a = 2.0 * kPi * static_cast<double>(j) / kFaceCount;
            const double r = 0.02 + 0.04 * static_cast<double>((j * 37) % 11) / 10.0;
            f[kFaceBegin + j] = {cx + r * std::cos(a) + 0.3 * jitter(), cy - 0.2 + r * std::sin(a) + 0.3 * jitter(),
                                 -0.03 + 0.01 * std::sin(3.0 * a)};
        }

        // dominant (right) hand draws an arc
        const double phi = theta + turn * 1.5 * kPi * s;
        const double wx = cx - 0.12 + radius * std::cos(phi) + jitter();
        const double wy = cy + 0.05 + radius * std::sin(phi) + jitter();
        const double wd = -0.1 + 0.05 * std::sin(phi + k);
        put_hand(f, kRightHandBegin, wx, wy, wd, 0.01 + 0.003 * static_cast<double>(opt.word_class % 3),
                 0.6 * k + 0.5 * s);
        f[pose::RightWrist] = {wx, wy, wd - 0.1};
        f[pose::RightElbow] = {(wx + f[pose::RightShoulder].x) / 2, (wy + f[pose::RightShoulder].y) / 2 + 0.08, -0.15};
        f[pose::RightPinky] = {wx + 0.01, wy - 0.02, wd - 0.1};
        f[pose::RightIndex] = {wx, wy - 0.03, wd - 0.1};
        f[pose::RightThumb] = {wx - 0.01, wy - 0.02, wd - 0.1};

        // the other hand rests low and is often lost by the tracker
        const double rx = cx + 0.12 + jitter();
        const double ry = cy + 0.25 + jitter();
        f[pose::LeftWrist] = {rx, ry, -0.05};
        f[pose::LeftElbow] = {cx + 0.11, cy + 0.13, -0.1};
        f[pose::LeftPinky] = {rx + 0.01, ry + 0.02, -0.05};
        f[pose::LeftIndex] = {rx, ry + 0.03, -0.05};
        f[pose::LeftThumb] = {rx - 0.01, ry + 0.02, -0.05};
        if (uniform(rng, 0.0, 1.0) < 0.4) put_hand(f, kLeftHandBegin, rx, ry, -0.05, 0.01, kPi);

        t.frames.push_back(opt.dominance == Dominance::Left ? mirrored(f, cx) : f);
    }
    return t;
}

void write_synthetic_dataset(const fs::path& root, const DatasetOptions& opt) {
    fs::create_directories(root / "landmarks");
    fs::create_directories(root / "annotations");
    std::mt19937_64 rng(opt.seed);
    for (int s : opt.signers) {
        const Dominance dom = opt.left_signers.count(s) ? Dominance::Left : Dominance::Right;
        const int fps = opt.fps15_signers.count(s) ? 15 : opt.fps24_signers.count(s) ? 24 : 30;
        std::ostringstream ann;
        ann << "# signer word trial view dominance fps intention start end withdrawal\n";
        for (int w = 0; w < opt.class_count; ++w) {
            TrialSequence stream;
            stream.signer = s;
            stream.word_class = w;
            stream.trial_index = 0;
            stream.dominance = dom;
            stream.fps = fps;
            auto idle = [&](std::size_t n) {
                SignOptions o{w, opt.class_count, s, 0, dom, 1, 0.004, opt.seed};
                for (std::size_t i = 0; i < n; ++i) {
                    o.trial_index = 900 + static_cast<int>(stream.frames.size());
                    auto f = synthetic_sign(o).frames.front();
                    for (std::size_t h = 0; h < 2 * kHandCount; ++h) f[kLeftHandBegin + h] = {};
                    stream.frames.push_back(f);
                }
            };
            idle(4);
            for (int tr = 1; tr <= opt.trials_per_video; ++tr) {
                std::size_t n = opt.min_frames + rng() % (opt.max_frames - opt.min_frames + 1);
                if (fps == 15) n = n / 2;
                if (fps == 24) n = n * 4 / 5;
                SignOptions o{w, opt.class_count, s, tr, dom, n, 0.004, opt.seed};
                const auto sign = synthetic_sign(o);
                const std::size_t start = stream.frames.size();
                stream.frames.insert(stream.frames.end(), sign.frames.begin(), sign.frames.end());
                const std::size_t end = stream.frames.size() - 1;
                idle(4);
                ann << "U" << s << " " << word_label(w) << " " << tr << " F " << to_string(dom) << " " << fps << " "
                    << start - 2 << " " << start << " " << end << " " << end + 2 << "\n";
            }
            write_landmarks(stream, root / "landmarks" / (video_stem(s, w, CameraView::Front) + ".lmk"));
        }
        std::ofstream(root / "annotations" / ("U" + std::to_string(s) + ".txt")) << ann.str();
    }
}

// ---------------------------------------------------------------- oracles

namespace {

void walk(std::span<const double> a, std::span<const double> b, std::size_t i, std::size_t j, double cost,
          double& best) {
    cost += std::abs(a[i] - b[j]);
    if (cost >= best) return;
    if (i + 1 == a.size() && j + 1 == b.size()) {
        best = cost;
        return;
    }
    if (i + 1 < a.size() && j + 1 < b.size()) walk(a, b, i + 1, j + 1, cost, best);
    if (i + 1 < a.size()) walk(a, b, i + 1, j, cost, best);
    if (j + 1 < b.size()) walk(a, b, i, j + 1, cost, best);
}

Eigen::MatrixXd dual_q(const FeatureMatrix& x, std::span<const int> y) {
    const auto n = static_cast<Eigen::Index>(x.rows);
    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double dot = 1.0;
            for (std::size_t c = 0; c < x.cols; ++c)
                dot += x.values[static_cast<std::size_t>(i) * x.cols + c] * x.values[static_cast<std::size_t>(j) * x.cols + c];
            q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * dot;
        }
    return q;
}

double dual_value(const Eigen::MatrixXd& q, const Eigen::VectorXd& a) { return 0.5 * a.dot(q * a) - a.sum(); }

}  // namespace

double dtw_paths_oracle(std::span<const double> a, std::span<const double> b) {
    double best = std::numeric_limits<double>::infinity();
    walk(a, b, 0, 0, 0.0, best);
    return best;
}

double svm_dual_value(const FeatureMatrix& x, std::span<const int> y, std::span<const double> a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
    return dual_value(dual_q(x, y), v);
}

// Every face of the box: each multiplier at 0, at C, or free. On a face the
// free block solves its stationarity system; a feasible solution is a
// candidate and the optimum is the smallest candidate.
double svm_dual_active_set_oracle(const FeatureMatrix& x, std::span<const int> y, double C) {
    const Eigen::MatrixXd q = dual_q(x, y);
    const std::size_t n = x.rows;
    std::size_t faces = 1;
    for (std::size_t i = 0; i < n; ++i) faces *= 3;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < faces; ++code) {
        std::vector<int> state(n);
        std::size_t c = code;
        std::vector<Eigen::Index> free;
        Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i, c /= 3) {
            state[i] = static_cast<int>(c % 3);
            if (state[i] == 1) a(static_cast<Eigen::Index>(i)) = C;
            if (state[i] == 2) free.push_back(static_cast<Eigen::Index>(i));
        }
        if (!free.empty()) {
            const auto m = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd qff(m, m);
            Eigen::VectorXd rhs(m);
            for (Eigen::Index r = 0; r < m; ++r) {
                rhs(r) = 1.0;
                for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k)
                    if (state[static_cast<std::size_t>(k)] == 1) rhs(r) -= q(free[static_cast<std::size_t>(r)], k) * C;
                for (Eigen::Index s = 0; s < m; ++s)
                    qff(r, s) = q(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(s)]);
            }
            const Eigen::VectorXd sol = qff.completeOrthogonalDecomposition().solve(rhs);
            if ((qff * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
            bool feasible = true;
            for (Eigen::Index r = 0; r < m; ++r) {
                if (sol(r) < -1e-12 || sol(r) > C + 1e-12) feasible = false;
                a(free[static_cast<std::size_t>(r)]) = std::clamp(sol(r), 0.0, C);
            }
            if (!feasible) continue;
        }
        best = std::min(best, dual_value(q, a));
    }
    return best;
}

// Coarse lattice over the whole box, then repeated finer lattices centred on
// the incumbent.
double svm_dual_grid_oracle(const FeatureMatrix& x, std::span<const int> y, double C) {
    const Eigen::MatrixXd q = dual_q(x, y);
    const std::size_t n = x.rows;
    auto search = [&](const Eigen::VectorXd& centre, double step, int half, Eigen::VectorXd& best_a, double& best) {
        const int side = 2 * half + 1;
        std::size_t points = 1;
        for (std::size_t i = 0; i < n; ++i) points *= static_cast<std::size_t>(side);
        Eigen::VectorXd a(static_cast<Eigen::Index>(n));
        for (std::size_t code = 0; code < points; ++code) {
            std::size_t c = code;
            for (std::size_t i = 0; i < n; ++i, c /= static_cast<std::size_t>(side)) {
                const double off = (static_cast<int>(c % static_cast<std::size_t>(side)) - half) * step;
                a(static_cast<Eigen::Index>(i)) = std::clamp(centre(static_cast<Eigen::Index>(i)) + off, 0.0, C);
            }
            const double v = dual_value(q, a);
            if (v < best) {
                best = v;
                best_a = a;
            }
        }
    };
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_a = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), C / 2);
    search(best_a, C / 6, 3, best_a, best);
    double step = C / 12;
    for (int it = 0; it < 60 && step > 1e-9; ++it) {
        const double before = best;
        search(Eigen::VectorXd(best_a), step, 2, best_a, best);
        if (before - best < 1e-12) step *= 0.5;
    }
    return best;
}

}  // namespace testsupport
