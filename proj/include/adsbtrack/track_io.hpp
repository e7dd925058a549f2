#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adsbtrack/geo.hpp"
#include "adsbtrack/models.hpp"
#include "adsbtrack/noisenet.hpp"
#include "adsbtrack/sim.hpp"

namespace adsbtrack::io {

// All columnar files carry values printed with 12 significant digits; a file
// written, read back and written again is byte-identical.
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw DataError("malformed number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// FNV-1a over the canonical config text; embedded in outputs for provenance.
inline std::string digest64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw DataError("cannot write " + tmp.string());
        f << content;
        if (!f.good()) throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct TrackFileHeader {
    int format = 1;
    double T = 1.0;
    geo::ProjectionConfig proj;
    std::string digest = "0";
    bool has_geo = false;
};

struct TrackFile {
    TrackFileHeader header;
    std::vector<double> t;
    std::vector<Vec> truth;  // 6-dim
    std::vector<Vec> obs;    // 6-dim
    std::vector<geo::AdsbRecord> geo_rows;  // only when header.has_geo
};

inline std::string serialize_track(const TrackFile& tf) {
    std::ostringstream out;
    const auto& h = tf.header;
    out << "# adsbtrack-track format=" << h.format << " T=" << fmt(h.T)
        << " cm=" << fmt(h.proj.central_meridian) << " fe=" << fmt(h.proj.false_easting)
        << " a=" << fmt(h.proj.a) << " f=" << fmt(h.proj.f) << " digest=" << h.digest
        << " geo=" << (h.has_geo ? 1 : 0) << "\n";
    out << "t,tx,ty,tz,tvx,tvy,tvz,ox,oy,oz,ovx,ovy,ovz";
    if (h.has_geo) out << ",lon,lat,alt,v,psi,theta";
    out << "\n";
    for (std::size_t k = 0; k < tf.t.size(); ++k) {
        out << fmt(tf.t[k]);
        for (int i = 0; i < 6; ++i) out << ',' << fmt(tf.truth[k](i));
        for (int i = 0; i < 6; ++i) out << ',' << fmt(tf.obs[k](i));
        if (h.has_geo) {
            const auto& g = tf.geo_rows[k];
            out << ',' << fmt(g.lon) << ',' << fmt(g.lat) << ',' << fmt(g.alt) << ',' << fmt(g.v)
                << ',' << fmt(g.psi) << ',' << fmt(g.theta);
        }
        out << "\n";
    }
    return out.str();
}

inline void write_track(const std::filesystem::path& path, const TrackFile& tf) {
    write_text_atomic(path, serialize_track(tf));
}

namespace detail {
inline std::string header_field(const std::string& header, const std::string& key) {
    const std::string needle = " " + key + "=";
    const auto pos = header.find(needle);
    if (pos == std::string::npos) throw DataError("track header missing field '" + key + "'");
    const auto start = pos + needle.size();
    auto end = header.find(' ', start);
    if (end == std::string::npos) end = header.size();
    return header.substr(start, end - start);
}
}  // namespace detail

inline TrackFile parse_track(std::istream& in, const std::string& name) {
    TrackFile tf;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# adsbtrack-track", 0) != 0)
        throw DataError(name + ": not an adsbtrack track file");
    tf.header.format = static_cast<int>(parse_double(detail::header_field(line, "format")));
    if (tf.header.format != 1) throw DataError(name + ": unsupported track format");
    tf.header.T = parse_double(detail::header_field(line, "T"));
    tf.header.proj.central_meridian = parse_double(detail::header_field(line, "cm"));
    tf.header.proj.false_easting = parse_double(detail::header_field(line, "fe"));
    tf.header.proj.a = parse_double(detail::header_field(line, "a"));
    tf.header.proj.f = parse_double(detail::header_field(line, "f"));
    tf.header.digest = detail::header_field(line, "digest");
    tf.header.has_geo = detail::header_field(line, "geo") == "1";

    if (!std::getline(in, line)) throw DataError(name + ": missing column header");
    const std::size_t expected_cols = tf.header.has_geo ? 19 : 13;
    if (split_csv(line).size() != expected_cols)
        throw DataError(name + ": column header does not match geo flag");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != expected_cols)
            throw DataError(name + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " columns, expected " + std::to_string(expected_cols));
        tf.t.push_back(parse_double(cells[0]));
        Vec tr(6), ob(6);
        for (int i = 0; i < 6; ++i) tr(i) = parse_double(cells[static_cast<std::size_t>(1 + i)]);
        for (int i = 0; i < 6; ++i) ob(i) = parse_double(cells[static_cast<std::size_t>(7 + i)]);
        tf.truth.push_back(tr);
        tf.obs.push_back(ob);
        if (tf.header.has_geo) {
            geo::AdsbRecord g;
            g.t = tf.t.back();
            g.lon = parse_double(cells[13]);
            g.lat = parse_double(cells[14]);
            g.alt = parse_double(cells[15]);
            g.v = parse_double(cells[16]);
            g.psi = parse_double(cells[17]);
            g.theta = parse_double(cells[18]);
            tf.geo_rows.push_back(g);
        }
        ++row;
    }
    if (tf.t.empty()) throw DataError(name + ": no data rows");
    for (std::size_t k = 1; k < tf.t.size(); ++k) {
        const double dt = tf.t[k] - tf.t[k - 1];
        if (!(dt > 0.0) || std::abs(dt - tf.header.T) > 1e-9 * std::max(1.0, tf.header.T))
            throw DataError(name + ": time column is not a strict grid with step T at row " + std::to_string(k));
    }
    return tf;
}

inline TrackFile read_track(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    return parse_track(f, path.filename().string());
}

// ---- network checkpoints ------------------------------------------------

// Hexfloat text: exact round trip and byte-identical reruns.
inline std::string fmt_hex(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline std::string serialize_checkpoint(const noisenet::NetworkParams& p, const models::SigmaBounds& b) {
    std::ostringstream out;
    out << "adsbtrack-checkpoint format=1\n";
    out << "input " << noisenet::kInputDim << "\n";
    out << "hidden " << p.hidden << "\n";
    out << "trunk " << p.trunk << "\n";
    out << "bounds " << fmt_hex(b.vw_min) << ' ' << fmt_hex(b.vw_max) << ' ' << fmt_hex(b.jw_min) << ' '
        << fmt_hex(b.jw_max) << ' ' << fmt_hex(b.r_pos_min) << ' ' << fmt_hex(b.r_pos_max) << ' '
        << fmt_hex(b.r_vel_min) << ' ' << fmt_hex(b.r_vel_max) << "\n";
    out << "params " << p.count() << "\n";
    int col = 0;
    p.for_each([&](const double& x) {
        out << fmt_hex(x) << (++col % 8 == 0 ? '\n' : ' ');
    });
    if (col % 8 != 0) out << '\n';
    return out.str();
}

inline void write_checkpoint(const std::filesystem::path& path, const noisenet::NetworkParams& p,
                             const models::SigmaBounds& b) {
    write_text_atomic(path, serialize_checkpoint(p, b));
}

inline std::pair<noisenet::NetworkParams, models::SigmaBounds> read_checkpoint(
    const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open checkpoint " + path.string());
    std::string word;
    f >> word;
    if (word != "adsbtrack-checkpoint") throw DataError(path.string() + ": not a checkpoint file");
    f >> word;
    if (word != "format=1") throw DataError(path.string() + ": unsupported checkpoint format");

    auto expect = [&](const char* key) {
        f >> word;
        if (word != key) throw DataError(path.string() + ": expected '" + key + "', found '" + word + "'");
    };
    int input = 0, hidden = 0, trunk = 0;
    expect("input");
    f >> input;
    expect("hidden");
    f >> hidden;
    expect("trunk");
    f >> trunk;
    if (input != noisenet::kInputDim) throw DataError(path.string() + ": unexpected input dimension");
    if (hidden < 1 || trunk < 1) throw DataError(path.string() + ": invalid network shape");

    // iostream extraction cannot parse hexfloat tokens; go through strtod
    auto next_double = [&]() {
        if (!(f >> word)) throw DataError(path.string() + ": truncated checkpoint");
        return parse_double(word);
    };
    models::SigmaBounds b;
    expect("bounds");
    b.vw_min = next_double();
    b.vw_max = next_double();
    b.jw_min = next_double();
    b.jw_max = next_double();
    b.r_pos_min = next_double();
    b.r_pos_max = next_double();
    b.r_vel_min = next_double();
    b.r_vel_max = next_double();
    b.validate();

    expect("params");
    std::size_t count = 0;
    f >> count;
    noisenet::NetworkParams p = noisenet::NetworkParams::zeros(hidden, trunk);
    if (count != p.count())
        throw DataError(path.string() + ": parameter count " + std::to_string(count) +
                        " does not match shape (expected " + std::to_string(p.count()) + ")");
    p.for_each([&](double& x) { x = next_double(); });
    return {std::move(p), b};
}

// ---- estimates and reports ------------------------------------------------

struct EstimatesFile {
    int format = 1;
    double T = 1.0;
    std::string mode;  // "fixed" or "adaptive"
    std::string digest = "0";
    std::vector<double> t;
    std::vector<Vec> estimates;                   // 6-dim
    std::vector<Vec> mu;                          // 2-dim
    std::vector<models::NoiseParams> step_params; // parameter set active per step
};

inline std::string serialize_estimates(const EstimatesFile& ef) {
    std::ostringstream out;
    out << "# adsbtrack-estimates format=" << ef.format << " T=" << fmt(ef.T) << " mode=" << ef.mode
        << " digest=" << ef.digest << "\n";
    out << "t,x,y,z,vx,vy,vz,mu_cv,mu_cj,svwx,svwy,svwz,sjwx,sjwy,sjwz,srx,sry,srz,srvx,srvy,srvz\n";
    for (std::size_t k = 0; k < ef.t.size(); ++k) {
        out << fmt(ef.t[k]);
        for (int i = 0; i < 6; ++i) out << ',' << fmt(ef.estimates[k](i));
        out << ',' << fmt(ef.mu[k](0)) << ',' << fmt(ef.mu[k](1));
        for (int i = 0; i < 12; ++i) out << ',' << fmt(ef.step_params[k].flat(i));
        out << "\n";
    }
    return out.str();
}

inline EstimatesFile read_estimates(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    EstimatesFile ef;
    std::string line;
    if (!std::getline(f, line) || line.rfind("# adsbtrack-estimates", 0) != 0)
        throw DataError(path.string() + ": not an estimates file");
    ef.T = parse_double(detail::header_field(line, "T"));
    ef.mode = detail::header_field(line, "mode");
    ef.digest = detail::header_field(line, "digest");
    if (!std::getline(f, line)) throw DataError(path.string() + ": missing column header");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 21) throw DataError(path.string() + ": bad estimates row");
        ef.t.push_back(parse_double(cells[0]));
        Vec e(6), m(2);
        for (int i = 0; i < 6; ++i) e(i) = parse_double(cells[static_cast<std::size_t>(1 + i)]);
        m(0) = parse_double(cells[7]);
        m(1) = parse_double(cells[8]);
        models::NoiseParams np;
        for (int i = 0; i < 12; ++i) np.set_flat(i, parse_double(cells[static_cast<std::size_t>(9 + i)]));
        ef.estimates.push_back(e);
        ef.mu.push_back(m);
        ef.step_params.push_back(np);
    }
    if (ef.t.empty()) throw DataError(path.string() + ": no data rows");
    return ef;
}

}  // namespace adsbtrack::io
