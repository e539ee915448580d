#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vitl/model.hpp"

namespace vitl {

namespace {

constexpr const char* kMagic = "VITL-MODEL";

void append_le(std::string& out, const Eigen::MatrixXd& m) {
    // row-major order
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            auto bits = std::bit_cast<std::uint64_t>(m(r, c));
            char bytes[8];
            for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
            out.append(bytes, 8);
        }
    }
}

Eigen::MatrixXd read_le(const std::string& in, std::size_t& offset, Index rows, Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + k])) << (8 * k);
            }
            m(r, c) = std::bit_cast<double>(bits);
            offset += 8;
        }
    }
    return m;
}

struct ArrayEntry {
    std::string name;
    Index rows;
    Index cols;
};

}  // namespace

std::string serialize_model(const VitlModel& model) {
    nlohmann::ordered_json header;
    header["t"] = model.t();
    header["m"] = model.m();
    header["d"] = model.d();
    header["p"] = model.p();
    header["n_observed"] = model.n_observed();
    header["lambda"] = model.lambda();
    header["gamma_x"] = model.spec().gamma_x;
    header["gamma_theta"] = model.spec().gamma_theta;
    header["solver"] = to_string(model.solver_path());

    Eigen::MatrixXd observed = model.observed().cast<double>().matrix();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> arrays = {
        {"coefficients", &model.coefficients()},
        {"anchors_x", &model.anchors_x()},
        {"anchors_theta", &model.anchors_theta()},
        {"observed", &observed},
    };
    const auto& a = model.spec().a;
    if (std::holds_alternative<IdentityA>(a)) {
        header["a"] = {{"kind", "identity"}};
    } else if (const auto* low = std::get_if<LowRankA<double>>(&a)) {
        header["a"] = {{"kind", "lowrank"}, {"rank", low->rank}};
        arrays.emplace_back("a_basis", &low->basis);
    } else {
        header["a"] = {{"kind", "explicit"}};
        arrays.emplace_back("a_matrix", &std::get<ExplicitA<double>>(a).matrix);
    }

    nlohmann::ordered_json listing = nlohmann::ordered_json::array();
    std::size_t payload = 0;
    for (const auto& [name, mat] : arrays) {
        listing.push_back({{"name", name}, {"rows", mat->rows()}, {"cols", mat->cols()}});
        payload += static_cast<std::size_t>(mat->size()) * 8;
    }
    header["arrays"] = listing;
    header["payload_bytes"] = payload;

    std::string out = std::string(kMagic) + " " + std::to_string(kModelFormatVersion) + "\n" + header.dump() + "\n";
    for (const auto& entry : arrays) append_le(out, *entry.second);
    return out;
}

VitlModel deserialize_model(const std::string& bytes) {
    const auto first_nl = bytes.find('\n');
    if (first_nl == std::string::npos) throw FormatError("model: missing header line");
    const std::string tag_line = bytes.substr(0, first_nl);
    const std::string magic_prefix = std::string(kMagic) + " ";
    if (tag_line.rfind(magic_prefix, 0) != 0) throw FormatError("model: not a vITL model file");
    const std::string version = tag_line.substr(magic_prefix.size());
    if (version != std::to_string(kModelFormatVersion)) throw FormatError("model: unsupported format version '" + version + "'");

    const auto second_nl = bytes.find('\n', first_nl + 1);
    if (second_nl == std::string::npos) throw FormatError("model: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(first_nl + 1, second_nl - first_nl - 1));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: corrupt header: ") + e.what());
    }

    try {
        const Index t = header.at("t").get<Index>();
        const Index m = header.at("m").get<Index>();
        const Index d = header.at("d").get<Index>();
        const Index p = header.at("p").get<Index>();
        const Index n_obs = header.at("n_observed").get<Index>();

        std::vector<ArrayEntry> entries;
        std::size_t payload = 0;
        for (const auto& item : header.at("arrays")) {
            ArrayEntry e{item.at("name").get<std::string>(), item.at("rows").get<Index>(), item.at("cols").get<Index>()};
            if (e.rows < 0 || e.cols < 0) throw FormatError("model: negative array shape");
            payload += static_cast<std::size_t>(e.rows * e.cols) * 8;
            entries.push_back(std::move(e));
        }
        if (payload != header.at("payload_bytes").get<std::size_t>()) throw FormatError("model: payload size mismatch");
        const std::size_t start = second_nl + 1;
        if (bytes.size() < start + payload) throw FormatError("model: truncated payload");
        if (bytes.size() > start + payload) throw FormatError("model: trailing bytes after payload");

        auto expect = [&](std::size_t k, const char* name, Index rows, Index cols) {
            if (k >= entries.size() || entries[k].name != name) throw FormatError(std::string("model: missing array ") + name);
            if (entries[k].rows != rows || (cols >= 0 && entries[k].cols != cols)) {
                throw FormatError(std::string("model: array ") + name + " has inconsistent shape");
            }
        };
        expect(0, "coefficients", n_obs, d);
        expect(1, "anchors_x", t, d);
        expect(2, "anchors_theta", t * m, p);
        expect(3, "observed", t * m, 1);

        std::size_t offset = start;
        Eigen::MatrixXd coefficients = read_le(bytes, offset, n_obs, d);
        Eigen::MatrixXd anchors_x = read_le(bytes, offset, t, d);
        Eigen::MatrixXd anchors_theta = read_le(bytes, offset, t * m, p);
        const Eigen::MatrixXd observed_raw = read_le(bytes, offset, t * m, 1);
        Eigen::Array<bool, Eigen::Dynamic, 1> observed(t * m);
        for (Index k = 0; k < t * m; ++k) {
            if (observed_raw(k) != 0.0 && observed_raw(k) != 1.0) throw FormatError("model: observed flags must be 0 or 1");
            observed(k) = observed_raw(k) == 1.0;
        }

        KernelSpec<double> spec;
        spec.gamma_x = header.at("gamma_x").get<double>();
        spec.gamma_theta = header.at("gamma_theta").get<double>();
        const std::string kind = header.at("a").at("kind").get<std::string>();
        if (kind == "identity") {
            if (entries.size() != 4) throw FormatError("model: unexpected extra arrays");
        } else if (kind == "lowrank") {
            expect(4, "a_basis", d, -1);
            LowRankA<double> low;
            low.rank = header.at("a").at("rank").get<Index>();
            low.basis = read_le(bytes, offset, entries[4].rows, entries[4].cols);
            spec.a = std::move(low);
        } else if (kind == "explicit") {
            expect(4, "a_matrix", d, d);
            spec.a = ExplicitA<double>{read_le(bytes, offset, d, d)};
        } else {
            throw FormatError("model: unknown A kind '" + kind + "'");
        }

        const std::string solver = header.at("solver").get<std::string>();
        SolverPath path = SolverPath::Ridge;
        if (solver == "sylvester") path = SolverPath::Sylvester;
        else if (solver == "kronecker") path = SolverPath::Kronecker;
        else if (solver != "ridge") throw FormatError("model: unknown solver tag '" + solver + "'");

        return VitlModel(std::move(coefficients), std::move(anchors_x), std::move(anchors_theta), std::move(observed), m,
                         std::move(spec), header.at("lambda").get<double>(), path);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: malformed header: ") + e.what());
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("model: inconsistent contents: ") + e.what());
    }
}

void save_model(const VitlModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

VitlModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize_model(buffer.str());
}

}  // namespace vitl
