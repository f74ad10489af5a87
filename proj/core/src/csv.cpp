#include "scop/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace scop {

namespace {

std::string locate(const std::string& what, const std::string& source, std::size_t row, std::size_t column) {
    std::ostringstream msg;
    msg << source;
    if (row > 0) msg << ":" << row;
    if (column > 0) msg << ":" << column;
    msg << ": " << what;
    return msg.str();
}

[[noreturn]] void fail(const std::string& what, const std::string& source, std::size_t row = 0,
                       std::size_t column = 0) {
    throw DataError(locate(what, source, row, column), row, column);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string format17(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace

DataError::DataError(const std::string& what, std::size_t r, std::size_t c)
    : std::runtime_error(what), row(r), column(c) {}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::string_view::npos;
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    std::size_t row = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++row;
        const std::string_view view = trim(line);
        if (view.empty()) {
            if (!have_header) fail("missing header row", source, row);
            continue;
        }
        const auto cells = split(view);
        if (!have_header) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::string_view name = trim(cells[c]);
                if (name.empty()) fail("empty column name", source, row, c + 1);
                double probe = 0.0;
                const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), probe);
                if (ec == std::errc() && ptr == name.data() + name.size()) {
                    fail("header row is mandatory; found numeric cell '" + std::string(name) + "'", source, row,
                         c + 1);
                }
                table.header.emplace_back(name);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            fail("expected " + std::to_string(table.header.size()) + " cells, found " +
                     std::to_string(cells.size()),
                 source, row);
        }
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string_view cell = trim(cells[c]);
            const char* first = cell.data();
            if (!cell.empty() && cell.front() == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), values[c]);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                fail("non-numeric cell '" + std::string(cell) + "'", source, row, c + 1);
            }
            if (!std::isfinite(values[c])) fail("non-finite cell '" + std::string(cell) + "'", source, row, c + 1);
        }
        table.rows.push_back(std::move(values));
    }
    if (in.bad()) fail("read error", source);
    if (!have_header) fail("missing header row", source);
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file", path.string());
    return parse_csv(in, path.string());
}

Dataset to_dataset(const CsvTable& table, const std::string& source) {
    const bool labeled = !table.header.empty() && table.header.front() == "y";
    const std::size_t offset = labeled ? 1 : 0;
    if (table.header.size() <= offset) fail("no feature columns", source, 1);
    if (table.rows.empty()) fail("no data rows", source);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto d = static_cast<Eigen::Index>(table.header.size() - offset);
    Dataset data;
    data.x.resize(n, d);
    if (labeled) data.y = Eigen::VectorXd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        if (labeled) (*data.y)(i) = row[0];
        for (Eigen::Index k = 0; k < d; ++k) data.x(i, k) = row[offset + static_cast<std::size_t>(k)];
    }
    return data;
}

Dataset load_dataset(const std::filesystem::path& path) { return to_dataset(read_csv(path), path.string()); }

std::vector<ScoredUnit> to_scored_units(const CsvTable& table, const std::string& source) {
    const std::size_t mu_col = table.column("mu_hat");
    const std::size_t t_col = table.column("t_score");
    const std::size_t y_col = table.column("y");
    if (mu_col == std::string_view::npos) fail("missing column 'mu_hat'", source, 1);
    if (t_col == std::string_view::npos) fail("missing column 't_score'", source, 1);
    const std::size_t expected = y_col == std::string_view::npos ? 2 : 3;
    if (table.header.size() != expected) fail("precomputed files hold only y, mu_hat and t_score", source, 1);
    if (table.rows.empty()) fail("no data rows", source);
    std::vector<ScoredUnit> units(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        ScoredUnit& u = units[i];
        u.index = i;
        u.mu_hat = row[mu_col];
        u.t_score = row[t_col];
        if (y_col != std::string_view::npos) {
            u.response = row[y_col];
            u.residual_score = std::abs(row[y_col] - u.mu_hat);
        }
    }
    return units;
}

std::vector<ScoredUnit> load_scored_units(const std::filesystem::path& path) {
    return to_scored_units(read_csv(path), path.string());
}

ExternalData load_external(const ExternalPaths& p) {
    const auto need_labels = [](const Dataset& d, const std::filesystem::path& path) {
        if (!d.labeled()) fail("first column must be 'y'", path.string(), 1);
    };
    const auto same_dim = [](const Dataset& a, const Dataset& b, const std::filesystem::path& path) {
        if (a.dim() != b.dim()) {
            fail("feature count " + std::to_string(b.dim()) + " differs from " + std::to_string(a.dim()),
                 path.string(), 1);
        }
    };

    if (p.precomputed) {
        if (p.cal.empty() || p.test.empty() || !p.labeled.empty() || !p.train.empty()) {
            throw std::invalid_argument("precomputed input needs exactly --cal and --test");
        }
        ExternalScored scored{load_scored_units(p.cal), load_scored_units(p.test)};
        for (const auto& u : scored.cal) {
            if (!u.response) fail("calibration units need a 'y' column", p.cal.string(), 1);
        }
        return scored;
    }
    if (!p.labeled.empty()) {
        if (p.test.empty() || !p.train.empty() || !p.cal.empty()) {
            throw std::invalid_argument("a labeled pool needs --test and no --train/--cal");
        }
        ExternalPool pool{load_dataset(p.labeled), load_dataset(p.test)};
        need_labels(pool.labeled, p.labeled);
        same_dim(pool.labeled, pool.test, p.test);
        return pool;
    }
    if (p.train.empty() || p.cal.empty() || p.test.empty()) {
        throw std::invalid_argument("external data needs --labeled and --test, or --train, --cal and --test");
    }
    ExternalSplit split{load_dataset(p.train), load_dataset(p.cal), load_dataset(p.test)};
    need_labels(split.train, p.train);
    need_labels(split.cal, p.cal);
    same_dim(split.train, split.cal, p.cal);
    same_dim(split.train, split.test, p.test);
    return split;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out = open_out(path);
    std::string line;
    if (data.labeled()) line = "y";
    for (std::size_t k = 0; k < data.dim(); ++k) {
        if (!line.empty()) line += ',';
        line += "x" + std::to_string(k + 1);
    }
    out << line << '\n';
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        line.clear();
        if (data.labeled()) line = format17((*data.y)(i));
        for (Eigen::Index k = 0; k < data.x.cols(); ++k) {
            if (!line.empty()) line += ',';
            line += format17(data.x(i, k));
        }
        out << line << '\n';
    }
    finish(out, path);
}

void write_scored_units(const std::filesystem::path& path, std::span<const ScoredUnit> units) {
    bool labeled = !units.empty();
    for (const auto& u : units) labeled = labeled && u.response.has_value();
    std::ofstream out = open_out(path);
    out << (labeled ? "y,mu_hat,t_score\n" : "mu_hat,t_score\n");
    for (const auto& u : units) {
        if (labeled) out << format17(*u.response) << ',';
        out << format17(u.mu_hat) << ',' << format17(u.t_score) << '\n';
    }
    finish(out, path);
}

} // namespace scop
