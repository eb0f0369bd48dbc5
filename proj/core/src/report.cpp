#include "wuglab/report.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "wuglab/util.hpp"

namespace fs = std::filesystem;

namespace wuglab {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 150;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* series_color(size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

} // namespace

std::string render_accuracy_svg(const std::string& title, const std::vector<Series>& series,
                                double baseline, bool has_baseline) {
    // Categorical x axis over the union of n values, in sorted order.
    std::set<int64_t> ns;
    for (const auto& s : series) {
        for (const auto& p : s.points) ns.insert(p.n);
    }
    std::vector<int64_t> xs(ns.begin(), ns.end());
    const int plot_w = kWidth - kMarginLeft - kMarginRight;
    const int plot_h = kHeight - kMarginTop - kMarginBottom;
    auto x_of = [&](int64_t n) {
        size_t idx = static_cast<size_t>(std::find(xs.begin(), xs.end(), n) - xs.begin());
        if (xs.size() <= 1) return kMarginLeft + plot_w / 2;
        return kMarginLeft + static_cast<int>(static_cast<double>(idx) * plot_w /
                                              static_cast<double>(xs.size() - 1));
    };
    auto y_of = [&](double acc) {
        return kMarginTop + static_cast<int>((1.0 - acc) * plot_h);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
        << "font-family=\"sans-serif\">" << title << "</text>\n";

    // axes
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
    for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        int y = y_of(tick);
        svg << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kMarginLeft
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
            << format_double(tick, 2) << "</text>\n";
    }
    for (int64_t n : xs) {
        int x = x_of(n);
        svg << "<line x1=\"" << x << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\"" << x
            << "\" y2=\"" << kMarginTop + plot_h + 4 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << kMarginTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << n
            << "</text>\n";
    }
    svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
        << "observations n</text>\n";

    if (has_baseline) {
        int y = y_of(baseline);
        svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << y << "\" x2=\"" << kMarginLeft + plot_w
            << "\" y2=\"" << y
            << "\" stroke=\"gray\" stroke-dasharray=\"6,4\" class=\"baseline\"/>\n";
        svg << "<text x=\"" << kMarginLeft + plot_w + 6 << "\" y=\"" << y + 4
            << "\" font-size=\"11\" fill=\"gray\" font-family=\"sans-serif\">n=0 baseline</text>\n";
    }

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        std::ostringstream points;
        for (const auto& p : s.points) {
            points << x_of(p.n) << "," << y_of(p.accuracy) << " ";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << series_color(si)
            << "\" stroke-width=\"2\" points=\"" << points.str() << "\"/>\n";
        for (const auto& p : s.points) {
            svg << "<circle cx=\"" << x_of(p.n) << "\" cy=\"" << y_of(p.accuracy)
                << "\" r=\"3\" fill=\"" << series_color(si) << "\"/>\n";
        }
        int ly = kMarginTop + 16 * static_cast<int>(si);
        svg << "<line x1=\"" << kMarginLeft + plot_w + 6 << "\" y1=\"" << ly + 16 << "\" x2=\""
            << kMarginLeft + plot_w + 26 << "\" y2=\"" << ly + 16 << "\" stroke=\""
            << series_color(si) << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kMarginLeft + plot_w + 30 << "\" y=\"" << ly + 20
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_report(const ResultStore& store, const fs::path& out_dir) {
    ensure_dir(out_dir);
    std::vector<std::string> lines = {ResultStore::kHeader};
    for (const auto& r : store.rows()) lines.push_back(ResultStore::to_csv_row(r));
    write_lines_atomic(out_dir / "results.csv", lines);

    // Group sentence-PLL rows: phenomenon -> evidence -> n -> accuracies.
    std::map<std::string, std::map<std::string, std::map<int64_t, std::vector<double>>>> grouped;
    for (const auto& r : store.rows()) {
        if (r.method != "sentence_pll") continue;
        grouped[r.phenomenon][r.evidence][r.n].push_back(r.accuracy);
    }
    auto mean_of = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return v.empty() ? 0.0 : m / static_cast<double>(v.size());
    };

    for (const auto& [ph, by_evidence] : grouped) {
        std::vector<Series> main_series, int_series;
        double baseline = 0.0;
        bool has_baseline = false;
        for (const auto& [evidence, by_n] : by_evidence) {
            if (evidence == "none") {
                if (by_n.count(0)) {
                    baseline = mean_of(by_n.at(0));
                    has_baseline = true;
                }
                continue;
            }
            Series s;
            s.label = evidence;
            for (const auto& [n, accs] : by_n) s.points.push_back({n, mean_of(accs)});
            if (evidence.rfind("int_", 0) == 0) {
                int_series.push_back(std::move(s));
            } else {
                main_series.push_back(std::move(s));
            }
        }
        if (!main_series.empty()) {
            write_file_atomic(out_dir / ("accuracy_" + ph + ".svg"),
                              render_accuracy_svg(ph, main_series, baseline, has_baseline));
        }
        if (!int_series.empty()) {
            write_file_atomic(out_dir / ("interference_" + ph + ".svg"),
                              render_accuracy_svg(ph + " interference", int_series, baseline,
                                                  has_baseline));
        }
    }
}

} // namespace wuglab
