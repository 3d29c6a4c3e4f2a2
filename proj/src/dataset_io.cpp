#include "hamlift/dataset_io.hpp"

#include "hamlift/io_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace hamlift::io {

using nlohmann::json;

json system_to_json(const models::SystemSpec& system) {
    json j;
    j["kind"] = models::kind_name(system.kind);
    j["grid_n"] = system.grid_n;
    j["c"] = system.wave_c;
    j["alpha"] = system.nls_alpha;
    j["beta"] = system.nls_beta;
    j["domain"] = {system.domain_lo, system.domain_hi};
    return j;
}

models::SystemSpec system_from_json(const json& j) {
    models::SystemSpec s;
    s.kind = models::kind_from_name(j.at("kind").get<std::string>());
    s.grid_n = j.at("grid_n").get<int>();
    s.wave_c = j.at("c").get<double>();
    s.nls_alpha = j.at("alpha").get<double>();
    s.nls_beta = j.at("beta").get<double>();
    s.domain_lo = j.at("domain")[0].get<double>();
    s.domain_hi = j.at("domain")[1].get<double>();
    return s;
}

void write_trajectory_csv(const integrators::Trajectory& traj, const std::filesystem::path& path,
                          bool include_derivs) {
    const Eigen::Index dim = traj.states.rows();
    const bool derivs = include_derivs && traj.has_derivs();
    std::string out = "t";
    for (Eigen::Index i = 0; i < dim; ++i) out += ",x_" + std::to_string(i);
    if (derivs)
        for (Eigen::Index i = 0; i < dim; ++i) out += ",xdot_" + std::to_string(i);
    out += '\n';
    for (Eigen::Index k = 0; k < traj.samples(); ++k) {
        out += format_double(traj.times[k]);
        for (Eigen::Index i = 0; i < dim; ++i) {
            out += ',';
            out += format_double(traj.states(i, k));
        }
        if (derivs)
            for (Eigen::Index i = 0; i < dim; ++i) {
                out += ',';
                out += format_double(traj.derivs(i, k));
            }
        out += '\n';
    }
    write_text_file(path, out);
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
}

}  // namespace

integrators::Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find('\n', pos);
        if (next == std::string::npos) next = text.size();
        std::string_view line(text.data() + pos, next - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        pos = next + 1;
    }
    if (lines.size() < 2) throw IoError("trajectory CSV has no data rows: " + path.string());

    const auto header = split(lines[0], ',');
    if (header.empty() || header[0] != "t")
        throw IoError("trajectory CSV must start with a 't' column: " + path.string());
    Eigen::Index dim = 0;
    while (1 + dim < static_cast<Eigen::Index>(header.size()) &&
           header[1 + dim] == "x_" + std::to_string(dim))
        ++dim;
    if (dim == 0) throw IoError("trajectory CSV has no x_i columns: " + path.string());
    const bool has_derivs = static_cast<Eigen::Index>(header.size()) == 1 + 2 * dim;
    if (!has_derivs && static_cast<Eigen::Index>(header.size()) != 1 + dim)
        throw IoError("trajectory CSV header malformed: " + path.string());
    if (has_derivs)
        for (Eigen::Index i = 0; i < dim; ++i)
            if (header[1 + dim + i] != "xdot_" + std::to_string(i))
                throw IoError("trajectory CSV xdot columns malformed: " + path.string());

    const Eigen::Index rows = static_cast<Eigen::Index>(lines.size()) - 1;
    integrators::Trajectory traj;
    traj.times.resize(rows);
    traj.states.resize(dim, rows);
    if (has_derivs) traj.derivs.resize(dim, rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const auto fields = split(lines[k + 1], ',');
        if (static_cast<Eigen::Index>(fields.size()) != 1 + (has_derivs ? 2 * dim : dim))
            throw IoError("trajectory CSV row " + std::to_string(k + 2) + " has wrong arity");
        traj.times[k] = parse_double(fields[0]);
        for (Eigen::Index i = 0; i < dim; ++i) traj.states(i, k) = parse_double(fields[1 + i]);
        if (has_derivs)
            for (Eigen::Index i = 0; i < dim; ++i)
                traj.derivs(i, k) = parse_double(fields[1 + dim + i]);
    }
    traj.validate();
    return traj;
}

void write_dataset(const integrators::Dataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    json manifest;
    manifest["format"] = "hamlift-dataset";
    manifest["version"] = 1;
    manifest["system"] = system_to_json(dataset.system);
    manifest["dt"] = dataset.dt;
    manifest["seed"] = dataset.seed;
    if (dataset.normalization) {
        manifest["normalization"]["mu"] = std::vector<double>(
            dataset.normalization->mu.data(),
            dataset.normalization->mu.data() + dataset.normalization->mu.size());
        manifest["normalization"]["sigma"] = std::vector<double>(
            dataset.normalization->sigma.data(),
            dataset.normalization->sigma.data() + dataset.normalization->sigma.size());
    } else {
        manifest["normalization"] = nullptr;
    }
    std::vector<std::string> files;
    for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03zu.csv", i);
        files.emplace_back(name);
        write_trajectory_csv(dataset.trajectories[i], dir / name);
    }
    manifest["trajectories"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

integrators::Dataset read_dataset(const std::filesystem::path& dir) {
    json manifest;
    try {
        manifest = json::parse(read_text_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw IoError("cannot parse dataset manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "hamlift-dataset")
        throw IoError("not a hamlift dataset: " + (dir / "manifest.json").string());
    if (manifest.value("version", 0) != 1)
        throw IoError("unsupported dataset format version " +
                      std::to_string(manifest.value("version", 0)));
    integrators::Dataset ds;
    ds.system = system_from_json(manifest.at("system"));
    ds.dt = manifest.at("dt").get<double>();
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    if (!manifest.at("normalization").is_null()) {
        integrators::NormalizationRecord rec;
        const auto mu = manifest["normalization"]["mu"].get<std::vector<double>>();
        const auto sigma = manifest["normalization"]["sigma"].get<std::vector<double>>();
        rec.mu = Eigen::Map<const Vec>(mu.data(), mu.size());
        rec.sigma = Eigen::Map<const Vec>(sigma.data(), sigma.size());
        ds.normalization = rec;
    }
    for (const auto& name : manifest.at("trajectories"))
        ds.trajectories.push_back(read_trajectory_csv(dir / name.get<std::string>()));
    if (ds.trajectories.empty()) throw IoError("dataset has no trajectories: " + dir.string());
    return ds;
}

}  // namespace hamlift::io
