#include "wtdiag/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wtdiag/error.hpp"

namespace wtdiag {

namespace {

constexpr char kMagic[8] = {'W', 'T', 'D', 'M', 'O', 'D', 'E', 'L'};

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void f64s(const std::vector<double>& v) {
        u64(v.size());
        for (double d : v) f64(d);
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
    void raw(void* p, std::size_t n) {
        if (n > bytes_.size() - pos_) throw FormatError("model file is truncated");
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
    double f64() { double v; raw(&v, sizeof v); return v; }
    std::size_t count() {
        const auto n = u64();
        if (n > bytes_.size() - pos_) throw FormatError("model file has an implausible length field");
        return static_cast<std::size_t>(n);
    }
    std::string str() {
        std::string s(count(), '\0');
        raw(s.data(), s.size());
        return s;
    }
    std::vector<double> f64s() {
        std::vector<double> v(count());
        for (auto& d : v) d = f64();
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::vector<int> to_labels(const std::vector<double>& y) {
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] >= 0.5 ? 1 : -1;
    return out;
}

void write_body(Writer& w, const SvmModel& m) {
    w.str(to_string(m.kernel));
    w.f64(m.gamma);
    w.f64(m.bias);
    w.u64(m.iterations);
    w.u64(m.support.size());
    w.u64(m.support.empty() ? 0 : m.support.front().size());
    for (const auto& row : m.support)
        for (double v : row) w.f64(v);
    w.f64s(m.coef);
}

void write_body(Writer& w, const AdaBoostModel& m) {
    w.u64(m.stumps.size());
    for (const auto& s : m.stumps) {
        w.f64(static_cast<double>(s.feature));
        w.f64(s.threshold);
        w.f64(s.polarity);
    }
    w.f64s(m.weights);
    w.f64s(m.errors);
    w.f64s(m.bound);
}

void write_body(Writer& w, const L2BoostModel& m) {
    w.f64(m.base);
    w.f64(m.shrinkage);
    w.f64s(m.train_mse);
    w.u64(m.trees.size());
    for (const auto& t : m.trees) {
        w.u64(t.nodes.size());
        for (const auto& n : t.nodes) {
            w.f64(n.feature);
            w.f64(n.threshold);
            w.f64(n.left);
            w.f64(n.right);
            w.f64(n.value);
        }
    }
}

SvmModel read_svm(Reader& r) {
    SvmModel m;
    m.kernel = kernel_from_string(r.str());
    m.gamma = r.f64();
    m.bias = r.f64();
    m.iterations = r.u64();
    const auto n = r.count();
    const auto d = r.u64();
    m.support.assign(n, std::vector<double>(d));
    for (auto& row : m.support)
        for (auto& v : row) v = r.f64();
    m.coef = r.f64s();
    if (m.coef.size() != n) throw FormatError("support vector and coefficient counts differ");
    return m;
}

AdaBoostModel read_adaboost(Reader& r) {
    AdaBoostModel m;
    m.stumps.resize(r.count());
    for (auto& s : m.stumps) {
        s.feature = static_cast<std::size_t>(r.f64());
        s.threshold = r.f64();
        s.polarity = static_cast<int>(r.f64());
    }
    m.weights = r.f64s();
    m.errors = r.f64s();
    m.bound = r.f64s();
    if (m.weights.size() != m.stumps.size()) throw FormatError("stump and weight counts differ");
    return m;
}

L2BoostModel read_l2boost(Reader& r) {
    L2BoostModel m;
    m.base = r.f64();
    m.shrinkage = r.f64();
    m.train_mse = r.f64s();
    m.trees.resize(r.count());
    for (auto& t : m.trees) {
        t.nodes.resize(r.count());
        for (auto& n : t.nodes) {
            n.feature = static_cast<int>(r.f64());
            n.threshold = r.f64();
            n.left = static_cast<int>(r.f64());
            n.right = static_cast<int>(r.f64());
            n.value = r.f64();
        }
        const int size = static_cast<int>(t.nodes.size());
        for (const auto& n : t.nodes)
            if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
                throw FormatError("regression tree has a dangling child index");
        if (t.nodes.empty()) throw FormatError("empty regression tree");
    }
    return m;
}

}  // namespace

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::svc: return "svc";
        case ModelKind::svr: return "svr";
        case ModelKind::adaboost: return "adaboost";
        case ModelKind::l2boost: return "l2boost";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    for (auto k : {ModelKind::svc, ModelKind::svr, ModelKind::adaboost, ModelKind::l2boost})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown model kind '" + s + "' (expected svc, svr, adaboost, l2boost)");
}

bool is_classifier(ModelKind k) { return k == ModelKind::svc || k == ModelKind::adaboost; }

double TrainedModel::predict(const std::vector<double>& features) const {
    const auto x = standardizer.apply(features);
    switch (kind) {
        case ModelKind::svc:
            return std::get<SvmModel>(body).decision(x);
        case ModelKind::svr:
            return target_mean + target_scale * std::get<SvmModel>(body).decision(x);
        case ModelKind::adaboost:
            return std::get<AdaBoostModel>(body).decision(x);
        case ModelKind::l2boost:
            return std::get<L2BoostModel>(body).predict(x);
    }
    return 0.0;
}

int TrainedModel::classify(const std::vector<double>& features) const {
    if (!is_classifier(kind)) throw DomainError("model for task " + task + " is a regressor");
    return predict(features) >= 0.0 ? 1 : -1;
}

TrainedModel train_model(ModelKind kind, const std::string& task,
                         const std::vector<std::string>& feature_names, const Matrix& x,
                         const std::vector<double>& y, const LearnerParams& params,
                         std::uint64_t seed) {
    if (x.empty()) throw InsufficientSamplesError("task " + task + " has no training samples");
    if (!feature_names.empty() && feature_names.size() != x.front().size())
        throw DomainError("feature name count does not match the feature dimension");
    TrainedModel m;
    m.kind = kind;
    m.task = task;
    m.feature_names = feature_names;
    m.n_train = x.size();
    m.seed = seed;
    m.standardizer = Standardizer::fit(x);
    const Matrix xs = m.standardizer.apply(x);

    switch (kind) {
        case ModelKind::svc: {
            const auto labels = to_labels(y);
            std::vector<double> alpha;
            auto svm = train_svc(xs, labels, params.svm, &alpha);
            m.kkt_violation = svc_kkt_violation(svm, xs, labels, alpha, params.svm.c);
            if (m.kkt_violation > params.svm.tolerance * (1.0 + 1e-9))
                throw DomainError("SVC for task " + task + " violates the KKT conditions by " +
                                  std::to_string(m.kkt_violation));
            m.body = std::move(svm);
            break;
        }
        case ModelKind::svr: {
            double mean = 0.0, var = 0.0;
            for (double v : y) mean += v;
            mean /= static_cast<double>(y.size());
            for (double v : y) var += (v - mean) * (v - mean);
            const double sd = std::sqrt(var / static_cast<double>(y.size()));
            m.target_mean = mean;
            m.target_scale = sd > 0.0 ? sd : 1.0;
            std::vector<double> z(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) z[i] = (y[i] - mean) / m.target_scale;
            m.body = train_svr(xs, z, params.svm);
            break;
        }
        case ModelKind::adaboost:
            m.body = train_adaboost(xs, to_labels(y), params.adaboost);
            break;
        case ModelKind::l2boost:
            m.body = train_l2boost(xs, y, params.l2boost);
            break;
    }
    return m;
}

std::vector<std::uint8_t> serialize_model(const TrainedModel& m) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(model_format_version);
    w.str(to_string(m.kind));
    w.str(m.task);
    w.u64(m.feature_names.size());
    for (const auto& n : m.feature_names) w.str(n);
    w.f64s(m.standardizer.mean);
    w.f64s(m.standardizer.scale);
    std::vector<double> flags(m.standardizer.constant.begin(), m.standardizer.constant.end());
    w.f64s(flags);
    w.f64(m.target_mean);
    w.f64(m.target_scale);
    w.u64(m.n_train);
    w.u64(m.seed);
    w.f64(m.kkt_violation);
    std::visit([&](const auto& body) { write_body(w, body); }, m.body);
    return std::move(w.out);
}

TrainedModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[8];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not a model file");
    const auto version = r.u32();
    if (version != model_format_version)
        throw VersionMismatchError("model format version " + std::to_string(version) +
                                   " is not supported (expected " +
                                   std::to_string(model_format_version) + ")");
    TrainedModel m;
    m.kind = model_kind_from_string(r.str());
    m.task = r.str();
    m.feature_names.resize(r.count());
    for (auto& n : m.feature_names) n = r.str();
    m.standardizer.mean = r.f64s();
    m.standardizer.scale = r.f64s();
    const auto flags = r.f64s();
    m.standardizer.constant.assign(flags.size(), false);
    for (std::size_t i = 0; i < flags.size(); ++i) m.standardizer.constant[i] = flags[i] != 0.0;
    if (m.standardizer.scale.size() != m.standardizer.mean.size() ||
        flags.size() != m.standardizer.mean.size())
        throw FormatError("standardizer statistics disagree in dimension");
    m.target_mean = r.f64();
    m.target_scale = r.f64();
    m.n_train = r.u64();
    m.seed = r.u64();
    m.kkt_violation = r.f64();
    switch (m.kind) {
        case ModelKind::svc:
        case ModelKind::svr: m.body = read_svm(r); break;
        case ModelKind::adaboost: m.body = read_adaboost(r); break;
        case ModelKind::l2boost: m.body = read_l2boost(r); break;
    }
    if (!r.done()) throw FormatError("trailing bytes after model body");
    return m;
}

void save_model(const std::filesystem::path& path, const TrainedModel& m) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for model file " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_model(bytes);
    } catch (const VersionMismatchError&) {
        throw;
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace wtdiag
