#include "wtdiag/dataset.hpp"

#include <map>
#include <sstream>

#include "wtdiag/codec.hpp"
#include "wtdiag/error.hpp"

namespace wtdiag {

using nlohmann::json;

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }
Range range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }
Complex complex_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json cable_json(const CableSpec& c) {
    return {{"r_cond", c.r_cond}, {"d_cond", c.d_cond}, {"r_insul", c.r_insul}, {"v0", c.v0}};
}
CableSpec cable_from(const json& j) {
    return {j.at("r_cond").get<double>(), j.at("d_cond").get<double>(),
            j.at("r_insul").get<double>(), j.at("v0").get<double>()};
}

json material_json(const MaterialParams& m) {
    return {{"alpha0", m.alpha0},
            {"nu0", m.nu0},
            {"f0", m.f0},
            {"eps0", m.eps0},
            {"eps_pe", complex_json(m.eps_pe)},
            {"yield", m.yield},
            {"depolarization", m.depolarization},
            {"water_content", m.water_content},
            {"water_conductivity", m.water_conductivity}};
}
MaterialParams material_from(const json& j) {
    MaterialParams m;
    m.alpha0 = j.at("alpha0").get<double>();
    m.nu0 = j.at("nu0").get<double>();
    m.f0 = j.at("f0").get<double>();
    m.eps0 = j.at("eps0").get<double>();
    m.eps_pe = complex_from(j.at("eps_pe"));
    m.yield = j.at("yield").get<double>();
    m.depolarization = j.at("depolarization").get<double>();
    m.water_content = j.at("water_content").get<double>();
    m.water_conductivity = j.at("water_conductivity").get<double>();
    return m;
}

json grid_json(const FrequencyGrid& g) {
    return {{"f_start", g.f_start}, {"delta_f", g.delta_f}, {"count", g.count}};
}
FrequencyGrid grid_from(const json& j) {
    return {j.at("f_start").get<double>(), j.at("delta_f").get<double>(),
            j.at("count").get<std::size_t>()};
}

json header_json(const DatasetHeader& h) {
    return {{"format", "wtdiag-dataset"},
            {"version", h.version},
            {"kind", to_string(h.kind)},
            {"observer", h.observer},
            {"count", h.count},
            {"first", h.first},
            {"config", to_json(h.config)},
            {"grid", grid_json(h.grid)}};
}

DatasetHeader parse_header(const std::string& line, const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": unreadable header: " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "wtdiag-dataset")
        throw FormatError(path.string() + ": not a wtdiag dataset");
    const int version = j.value("version", -1);
    if (version != dataset_format_version)
        throw VersionMismatchError(path.string() + ": format version " + std::to_string(version) +
                                   " is not supported (expected " +
                                   std::to_string(dataset_format_version) + ")");
    try {
        DatasetHeader h;
        h.version = version;
        h.kind = dataset_kind_from_string(j.at("kind").get<std::string>());
        h.observer = j.at("observer").get<int>();
        h.count = j.at("count").get<std::size_t>();
        h.first = j.at("first").get<std::uint64_t>();
        h.config = scenario_config_from_json(j.at("config"));
        h.grid = grid_from(j.at("grid"));
        return h;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": malformed header: " + e.what());
    }
}

std::filesystem::path sums_path(const std::filesystem::path& p) {
    return p.string() + ".sum";
}

std::map<std::size_t, std::uint64_t> read_sums(const std::filesystem::path& path) {
    std::ifstream in(sums_path(path));
    if (!in) throw IoError("cannot open checksum file " + sums_path(path).string());
    std::map<std::size_t, std::uint64_t> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t idx;
        std::string hex;
        if (!(ls >> idx >> hex)) throw FormatError("malformed checksum line '" + line + "'");
        out[idx] = std::stoull(hex, nullptr, 16);
    }
    return out;
}

}  // namespace

json to_json(const ScenarioConfig& c) {
    return {{"gamma_homo", range_json(c.gamma_homo)},
            {"gamma_local", range_json(c.gamma_local)},
            {"lwt", range_json(c.lwt)},
            {"center_offset", range_json(c.center_offset)},
            {"load_re", range_json(c.load_re)},
            {"load_im", range_json(c.load_im)},
            {"eps_wt_magnitude", range_json(c.eps_wt_magnitude)},
            {"eps_wt_loss_tangent", range_json(c.eps_wt_loss_tangent)},
            {"branch_length", c.branch_length},
            {"ld_probability", c.ld_probability},
            {"balance", c.balance},
            {"far_ld_fraction", c.far_ld_fraction},
            {"estimation_noise", c.estimation_noise},
            {"z_plm", c.z_plm},
            {"cable", cable_json(c.cable)},
            {"material", material_json(c.material)},
            {"seed", c.seed}};
}

ScenarioConfig scenario_config_from_json(const json& j) {
    ScenarioConfig c;
    c.gamma_homo = range_from(j.at("gamma_homo"));
    c.gamma_local = range_from(j.at("gamma_local"));
    c.lwt = range_from(j.at("lwt"));
    c.center_offset = range_from(j.at("center_offset"));
    c.load_re = range_from(j.at("load_re"));
    c.load_im = range_from(j.at("load_im"));
    c.eps_wt_magnitude = range_from(j.at("eps_wt_magnitude"));
    c.eps_wt_loss_tangent = range_from(j.at("eps_wt_loss_tangent"));
    c.branch_length = j.at("branch_length").get<std::array<double, branch_count>>();
    c.ld_probability = j.at("ld_probability").get<double>();
    c.balance = j.at("balance").get<bool>();
    c.far_ld_fraction = j.at("far_ld_fraction").get<double>();
    c.estimation_noise = j.value("estimation_noise", 0.0);
    c.z_plm = j.at("z_plm").get<double>();
    c.cable = cable_from(j.at("cable"));
    c.material = material_from(j.at("material"));
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json to_json(const NetworkScenario& s) {
    json aging = json::array();
    for (const auto& a : s.aging) {
        json entry = {{"gamma_homo", a.gamma_homo}};
        if (a.local)
            entry["local"] = {{"gamma", a.local->gamma},
                              {"start_m", a.local->start_m},
                              {"length_m", a.local->length_m}};
        aging.push_back(entry);
    }
    json loads = json::array();
    for (auto z : s.be_load) loads.push_back(complex_json(z));
    return {{"branch_length", s.branch_length},
            {"aging", aging},
            {"be_load", loads},
            {"z_plm", complex_json(s.z_plm)},
            {"cable", cable_json(s.cable)},
            {"material", material_json(s.material)},
            {"perturbation",
             {{"magnitude", s.perturbation.magnitude},
              {"loss_tangent", s.perturbation.loss_tangent}}},
            {"estimation_noise", s.estimation_noise},
            {"seed", s.seed}};
}

NetworkScenario scenario_from_json(const json& j) {
    NetworkScenario s;
    s.branch_length = j.at("branch_length").get<std::array<double, branch_count>>();
    const auto& aging = j.at("aging");
    if (aging.size() != branch_count) throw FormatError("scenario needs six aging profiles");
    for (int b = 0; b < branch_count; ++b) {
        s.aging[b].gamma_homo = aging[b].at("gamma_homo").get<double>();
        if (aging[b].contains("local")) {
            const auto& l = aging[b]["local"];
            s.aging[b].local = LocalDegradation{l.at("gamma").get<double>(),
                                                l.at("start_m").get<double>(),
                                                l.at("length_m").get<double>()};
        }
    }
    // Everything below is optional in hand-written files.
    if (j.contains("be_load")) {
        const auto& loads = j.at("be_load");
        if (loads.size() != modem_count) throw FormatError("scenario needs three extension loads");
        for (int i = 0; i < modem_count; ++i) s.be_load[i] = complex_from(loads[i]);
    }
    if (j.contains("z_plm")) s.z_plm = complex_from(j.at("z_plm"));
    if (j.contains("cable")) s.cable = cable_from(j.at("cable"));
    if (j.contains("material")) s.material = material_from(j.at("material"));
    if (j.contains("perturbation")) {
        s.perturbation.magnitude = j.at("perturbation").at("magnitude").get<double>();
        s.perturbation.loss_tangent = j.at("perturbation").at("loss_tangent").get<double>();
    }
    s.estimation_noise = j.value("estimation_noise", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
}

json to_json(const Labels& l) {
    return {{"ld_present", l.ld_present}, {"ld_branch", l.ld_branch}, {"gamma_homo", l.gamma_homo},
            {"t_eq", l.t_eq},           {"gamma_local", l.gamma_local}, {"target_m", l.target_m},
            {"lwt_m", l.lwt_m},         {"product", l.product}};
}

Labels labels_from_json(const json& j) {
    Labels l;
    l.ld_present = j.at("ld_present").get<bool>();
    l.ld_branch = j.at("ld_branch").get<int>();
    l.gamma_homo = j.at("gamma_homo").get<double>();
    l.t_eq = j.at("t_eq").get<double>();
    l.gamma_local = j.at("gamma_local").get<double>();
    l.target_m = j.at("target_m").get<double>();
    l.lwt_m = j.at("lwt_m").get<double>();
    l.product = j.at("product").get<double>();
    return l;
}

std::string encode_record(std::size_t index, const LabeledSample& sample) {
    json obs = json::array();
    for (const auto& o : sample.observations)
        obs.push_back({{"observer", o.observer},
                       {"partner", o.partner},
                       {"h_f", codec::encode_complex(o.h_f)},
                       {"z_in", codec::encode_complex(o.z_in)},
                       {"h_ref", codec::encode_complex(o.h_ref)}});
    json rec = {{"index", index},
                {"scenario", to_json(sample.scenario)},
                {"labels", to_json(sample.labels)},
                {"observations", obs}};
    return rec.dump();
}

LabeledSample decode_record(std::size_t index, const std::string& line, const FrequencyGrid& grid) {
    try {
        const json rec = json::parse(line);
        if (rec.at("index").get<std::size_t>() != index)
            throw TruncatedRecordError(index, "record index out of sequence");
        LabeledSample s;
        s.scenario = scenario_from_json(rec.at("scenario"));
        s.labels = labels_from_json(rec.at("labels"));
        for (const auto& o : rec.at("observations")) {
            ChannelObservation c;
            c.grid = grid;
            c.observer = o.at("observer").get<int>();
            c.partner = o.at("partner").get<int>();
            c.h_f = codec::decode_complex(o.at("h_f").get<std::string>());
            c.z_in = codec::decode_complex(o.at("z_in").get<std::string>());
            c.h_ref = codec::decode_complex(o.at("h_ref").get<std::string>());
            if (c.h_f.size() != grid.count || c.z_in.size() != grid.count ||
                c.h_ref.size() != grid.count)
                throw TruncatedRecordError(index, "channel spectrum length does not match the grid");
            s.observations.push_back(std::move(c));
        }
        return s;
    } catch (const TruncatedRecordError&) {
        throw;
    } catch (const json::exception& e) {
        throw TruncatedRecordError(index, e.what());
    } catch (const FormatError& e) {
        throw TruncatedRecordError(index, e.what());
    }
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path, const DatasetHeader& header)
    : path_(path), expected_(header.count) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    data_.open(path, std::ios::binary | std::ios::trunc);
    sums_.open(sums_path(path), std::ios::binary | std::ios::trunc);
    if (!data_ || !sums_) throw IoError("cannot open " + path.string() + " for writing");
    data_ << header_json(header).dump() << '\n';
}

void DatasetWriter::write(const LabeledSample& sample) {
    if (written_ >= expected_)
        throw IoError(path_.string() + ": more records than announced in the header");
    const std::string line = encode_record(written_, sample);
    data_ << line << '\n';
    sums_ << written_ << ' ' << codec::hex64(codec::fnv1a64(line)) << '\n';
    if (!data_ || !sums_)
        throw IoError(path_.string() + ": write failed at sample " + std::to_string(written_));
    ++written_;
}

void DatasetWriter::close() {
    if (closed_) return;
    closed_ = true;
    data_.close();
    sums_.close();
    if (written_ != expected_)
        throw IoError(path_.string() + ": wrote " + std::to_string(written_) + " of " +
                      std::to_string(expected_) + " records");
}

DatasetWriter::~DatasetWriter() {
    if (!closed_) {
        data_.close();
        sums_.close();
    }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    DatasetHeader h = ds.header;
    h.count = ds.samples.size();
    DatasetWriter w(path, h);
    for (const auto& s : ds.samples) w.write(s);
    w.close();
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const DatasetHeader&)>& on_header,
                     const std::function<void(std::size_t, LabeledSample&&)>& on_record) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
    const DatasetHeader header = parse_header(line, path);
    if (on_header) on_header(header);
    const auto sums = read_sums(path);
    for (std::size_t i = 0; i < header.count; ++i) {
        if (!std::getline(in, line)) throw TruncatedRecordError(i, "record missing from file");
        const auto it = sums.find(i);
        if (it == sums.end()) throw ChecksumError(i, "no checksum listed");
        if (it->second != codec::fnv1a64(line)) throw ChecksumError(i, "checksum mismatch");
        on_record(i, decode_record(i, line, header.grid));
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    Dataset ds;
    for_each_record(
        path, [&](const DatasetHeader& h) { ds.header = h; },
        [&](std::size_t, LabeledSample&& s) { ds.samples.push_back(std::move(s)); });
    return ds;
}

DatasetHeader generate_dataset(const ScenarioConfig& cfg, DatasetKind kind, int observer,
                               std::size_t n, const std::filesystem::path& path, std::uint64_t first) {
    if (n == 0) throw ValidationError("dataset size must be positive");
    cfg.validate();
    DatasetHeader h;
    h.kind = kind;
    h.observer = observer;
    h.count = n;
    h.first = first;
    h.config = cfg;
    DatasetWriter w(path, h);
    generate_samples(cfg, kind, observer, n, [&](std::size_t i, LabeledSample&& s) {
        try {
            w.write(s);
        } catch (const IoError& e) {
            throw IoError(std::string(e.what()) + " (sample " + std::to_string(i) + ")");
        }
    }, first);
    w.close();
    return h;
}

}  // namespace wtdiag
