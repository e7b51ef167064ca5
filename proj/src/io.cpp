#include "teralasso/io.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "teralasso/errors.hpp"

namespace teralasso::io {

namespace {

const char* kOrderTag = "mode1-slowest";

std::uint64_t to_little_endian(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::little)
        return v;
    else
        return __builtin_bswap64(v);
}

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

} // namespace

json dims_to_json(const Dims& d)
{
    return json(std::vector<std::size_t>(d.sizes().begin(), d.sizes().end()));
}

Dims dims_from_json(const json& j)
{
    if (!j.is_array()) throw ValidationError("dims must be an array of positive integers");
    std::vector<std::size_t> sizes;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<long long>() <= 0)
            throw ValidationError("dims must be an array of positive integers");
        sizes.push_back(v.get<std::size_t>());
    }
    return Dims(std::move(sizes));
}

json to_json(const FactorSet& f)
{
    json factors = json::array();
    for (const auto& m : f.factors()) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
        }
        factors.push_back(std::move(rows));
    }
    return json{{"dims", dims_to_json(f.dims())}, {"factors", std::move(factors)}};
}

FactorSet factor_set_from_json(const json& j)
{
    try {
        const Dims dims = dims_from_json(j.at("dims"));
        const json& factors = j.at("factors");
        if (!factors.is_array() || factors.size() != dims.order())
            throw ValidationError("factor file: 'factors' must hold one matrix per mode");
        std::vector<Matrix> out;
        for (std::size_t k = 0; k < dims.order(); ++k) {
            const auto d = static_cast<Eigen::Index>(dims[k]);
            const json& rows = factors[k];
            if (!rows.is_array() || rows.size() != dims[k])
                throw ValidationError("factor file: factor " + std::to_string(k) + " has the wrong shape");
            Matrix m(d, d);
            for (Eigen::Index r = 0; r < d; ++r) {
                const json& row = rows[static_cast<std::size_t>(r)];
                if (!row.is_array() || row.size() != dims[k])
                    throw ValidationError("factor file: factor " + std::to_string(k) + " has the wrong shape");
                for (Eigen::Index c = 0; c < d; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
            }
            out.push_back(std::move(m));
        }
        return FactorSet(dims, std::move(out));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("factor file: ") + e.what());
    }
}

json to_json(const SolverReport& r)
{
    return json{{"termination", std::string(to_string(r.termination))},
                {"iterations", r.iterations},
                {"kkt_residual", r.kkt_residual},
                {"rho", r.rho},
                {"objective", r.objective},
                {"stepsize", r.stepsize},
                {"backtracks", r.backtracks},
                {"safe_steps", r.safe_steps},
                {"eig_min", r.eig_min},
                {"eig_max", r.eig_max}};
}

json to_json(const SolverConfig& c)
{
    json j{{"rho_bar", c.rho_bar},
           {"backtrack_c", c.backtrack_c},
           {"zeta0", c.zeta0},
           {"max_iter", c.max_iter},
           {"max_backtracks", c.max_backtracks},
           {"tol_obj", c.tol_obj},
           {"tol_kkt", c.tol_kkt},
           {"min_iter", c.min_iter},
           {"step_rule", c.step_rule == StepRule::fixed ? "fixed" : "bb"}};
    j["rho_override"] = c.rho_override ? json(*c.rho_override) : json(nullptr);
    return j;
}

SolverConfig solver_config_from_json(const json& j, SolverConfig c)
{
    try {
        c.rho_bar = get_or(j, "rho_bar", c.rho_bar);
        c.backtrack_c = get_or(j, "backtrack_c", c.backtrack_c);
        c.zeta0 = get_or(j, "zeta0", c.zeta0);
        c.max_iter = get_or(j, "max_iter", c.max_iter);
        c.max_backtracks = get_or(j, "max_backtracks", c.max_backtracks);
        c.tol_obj = get_or(j, "tol_obj", c.tol_obj);
        c.tol_kkt = get_or(j, "tol_kkt", c.tol_kkt);
        c.min_iter = get_or(j, "min_iter", c.min_iter);
        if (const auto it = j.find("step_rule"); it != j.end() && !it->is_null()) {
            const auto s = it->get<std::string>();
            if (s == "bb")
                c.step_rule = StepRule::barzilai_borwein;
            else if (s == "fixed")
                c.step_rule = StepRule::fixed;
            else
                throw ValidationError("solver: unknown step_rule '" + s + "'");
        }
        if (const auto it = j.find("rho_override"); it != j.end())
            c.rho_override = it->is_null() ? std::nullopt
                                            : std::optional<std::vector<double>>(it->get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("solver config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const ModelSpec& m)
{
    return json{{"kind", std::string(to_string(m.kind))}, {"edges", m.edges}, {"ar_coeff", m.ar_coeff}};
}

ModelSpec model_spec_from_json(const json& j, ModelSpec m)
{
    try {
        if (const auto it = j.find("kind"); it != j.end()) m.kind = model_kind_from_string(it->get<std::string>());
        m.edges = get_or(j, "edges", m.edges);
        m.ar_coeff = get_or(j, "ar_coeff", m.ar_coeff);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model spec: ") + e.what());
    }
    return m;
}

json to_json(const ExperimentSpec& s)
{
    json dims = json::array();
    for (const auto& d : s.dims) dims.push_back(dims_to_json(d));
    return json{{"model", to_json(s.model)},
                {"dims", std::move(dims)},
                {"n", s.n},
                {"rho_bar", s.rho_bar},
                {"trials", s.trials},
                {"seed", s.seed},
                {"support_eps", s.support_eps},
                {"selection", std::string(to_string(s.selection))},
                {"solver", to_json(s.solver)}};
}

ExperimentSpec experiment_spec_from_json(const json& j, ExperimentSpec s)
{
    try {
        if (const auto it = j.find("model"); it != j.end()) s.model = model_spec_from_json(*it, s.model);
        if (const auto it = j.find("dims"); it != j.end()) {
            s.dims.clear();
            // either one dims array or a list of them
            if (!it->empty() && (*it)[0].is_number())
                s.dims.push_back(dims_from_json(*it));
            else
                for (const auto& d : *it) s.dims.push_back(dims_from_json(d));
        }
        if (const auto it = j.find("n"); it != j.end())
            s.n = it->is_array() ? it->get<std::vector<std::size_t>>()
                                 : std::vector<std::size_t>{it->get<std::size_t>()};
        s.rho_bar = get_or(j, "rho_bar", s.rho_bar);
        s.trials = get_or(j, "trials", s.trials);
        s.seed = get_or(j, "seed", s.seed);
        s.support_eps = get_or(j, "support_eps", s.support_eps);
        if (const auto it = j.find("selection"); it != j.end())
            s.selection = rho_selection_from_string(it->get<std::string>());
        if (const auto it = j.find("solver"); it != j.end()) s.solver = solver_config_from_json(*it, s.solver);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("experiment spec: ") + e.what());
    }
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_json(const std::filesystem::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path)
{
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_factor_set(const std::filesystem::path& path, const FactorSet& f)
{
    write_json(path, to_json(f));
}

FactorSet read_factor_set(const std::filesystem::path& path)
{
    return factor_set_from_json(read_json(path));
}

void write_ktns(const std::filesystem::path& path, const DataTensorSet& data)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    const json header{{"dims", dims_to_json(data.dims())},
                      {"n", data.replicates()},
                      {"dtype", "f64"},
                      {"order", kOrderTag}};
    os << header.dump() << '\n';
    std::vector<std::uint64_t> raw(data.values().size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = to_little_endian(std::bit_cast<std::uint64_t>(data.values()[i]));
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

DataTensorSet read_ktns(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line)) throw IoError("'" + path.string() + "': missing header line");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        throw IoError("'" + path.string() + "': malformed header: " + e.what());
    }
    const std::string where = "'" + path.string() + "': ";
    std::optional<Dims> dims;
    std::size_t n = 0;
    try {
        dims = dims_from_json(header.at("dims"));
        n = header.at("n").get<std::size_t>();
        if (header.value("dtype", "") != "f64") throw IoError(where + "dtype must be f64");
        if (header.value("order", "") != kOrderTag)
            throw IoError(where + "unsupported order '" + header.value("order", "") + "'");
    } catch (const json::exception& e) {
        throw IoError(where + "bad header: " + e.what());
    } catch (const ValidationError& e) {
        throw IoError(where + "bad header: " + e.what());
    }
    if (n == 0) throw IoError(where + "n must be positive");
    const std::size_t p = dims->total();
    if (n > std::numeric_limits<std::size_t>::max() / 8 / p) throw IoError(where + "header sizes overflow");
    const std::size_t count = n * p;
    // Compare against the file size before allocating anything.
    const auto size = std::filesystem::file_size(path);
    const auto expect = static_cast<std::uintmax_t>(line.size() + 1) + count * 8;
    if (size < expect) throw IoError(where + "payload truncated");
    if (size > expect) throw IoError(where + "trailing bytes after payload");
    std::vector<std::uint64_t> raw(count);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 8));
    if (static_cast<std::size_t>(is.gcount()) != count * 8) throw IoError(where + "payload truncated");
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<double>(to_little_endian(raw[i]));
    return DataTensorSet(std::move(*dims), n, std::move(values));
}

} // namespace teralasso::io
