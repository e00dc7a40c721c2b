#include "nightgrav/walks.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "nightgrav/common.hpp"
#include "nightgrav/rng.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

void WalkParams::validate() const {
    if (!(return_param > 0.0)) throw ValidationError("walk parameter p must be > 0");
    if (!(inout_param > 0.0)) throw ValidationError("walk parameter q must be > 0");
    if (walk_length < 1) throw ValidationError("walk_length must be >= 1");
    if (walks_per_node < 1) throw ValidationError("walks_per_node must be >= 1");
}

std::vector<double> first_step_distribution(const GravityNetwork& net, std::uint32_t v) {
    const auto weights = net.neighbor_weights(v);
    if (weights.empty()) throw ValidationError("first_step_distribution: node has no neighbors");
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> probs(weights.size());
    if (total > 0.0) {
        for (std::size_t i = 0; i < weights.size(); ++i) probs[i] = weights[i] / total;
    } else {
        // all incident weights zero: uniform limit
        const double u = 1.0 / static_cast<double>(weights.size());
        std::fill(probs.begin(), probs.end(), u);
    }
    return probs;
}

namespace {

// Unnormalized second-order scores into `scores`; returns the total.
double second_step_scores(const GravityNetwork& net, std::uint32_t prev, std::uint32_t cur,
                          const WalkParams& params, bool unit_weights,
                          std::vector<double>& scores) {
    const auto ids = net.neighbors(cur);
    const auto weights = net.neighbor_weights(cur);
    scores.resize(ids.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::uint32_t x = ids[i];
        double alpha;
        if (x == prev) {
            alpha = 1.0 / params.return_param;
        } else if (net.has_edge(x, prev)) {
            alpha = 1.0;
        } else {
            alpha = 1.0 / params.inout_param;
        }
        const double s = alpha * (unit_weights ? 1.0 : weights[i]);
        scores[i] = s;
        total += s;
    }
    return total;
}

}  // namespace

std::vector<double> second_step_distribution(const GravityNetwork& net, std::uint32_t prev,
                                             std::uint32_t cur, const WalkParams& params) {
    params.validate();
    if (!net.has_edge(prev, cur)) {
        throw ValidationError("second_step_distribution: (prev, cur) is not an edge");
    }
    std::vector<double> scores;
    double total = second_step_scores(net, prev, cur, params, false, scores);
    if (!(total > 0.0)) total = second_step_scores(net, prev, cur, params, true, scores);
    for (double& s : scores) s /= total;
    return scores;
}

WalkSet simulate_walks(const GravityNetwork& net, const WalkParams& params, unsigned n_threads) {
    params.validate();
    const auto n = static_cast<std::uint32_t>(net.node_count());
    for (std::uint32_t v = 0; v < n; ++v) {
        if (net.degree(v) == 0) {
            throw ValidationError("simulate_walks: isolated node " + std::to_string(v));
        }
    }
    WalkSet walks(n, params.walks_per_node, params.walk_length);

    const auto run_node = [&](std::uint32_t start) {
        std::vector<double> scores;
        for (std::uint32_t w = 0; w < params.walks_per_node; ++w) {
            Rng rng(mix_seed(params.seed, start, w));
            auto out = walks.walk(start, w);
            out[0] = start;
            // step 1: first-order rule
            {
                const auto ids = net.neighbors(start);
                const auto weights = net.neighbor_weights(start);
                double total = 0.0;
                for (double wt : weights) total += wt;
                std::size_t pick;
                if (total > 0.0) {
                    pick = rng.categorical(weights, total);
                } else {
                    pick = static_cast<std::size_t>(rng.uniform_index(ids.size()));
                }
                out[1] = ids[pick];
            }
            for (std::uint32_t step = 2; step <= params.walk_length; ++step) {
                const std::uint32_t prev = out[step - 2];
                const std::uint32_t cur = out[step - 1];
                double total = second_step_scores(net, prev, cur, params, false, scores);
                if (!(total > 0.0)) total = second_step_scores(net, prev, cur, params, true, scores);
                const std::size_t pick = rng.categorical(scores, total);
                out[step] = net.neighbors(cur)[pick];
            }
        }
    };

    if (n_threads <= 1 || n < 2) {
        for (std::uint32_t v = 0; v < n; ++v) run_node(v);
    } else {
        std::vector<std::thread> pool;
        const unsigned workers = std::min<unsigned>(n_threads, n);
        std::atomic<std::uint32_t> next{0};
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::uint32_t v = next.fetch_add(1);
                    if (v >= n) break;
                    run_node(v);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return walks;
}

void write_walks(const std::filesystem::path& path, const WalkSet& walks,
                 const WalkParams& params) {
    std::ofstream out = open_output(path);
    out << "#params p=" << format_double(params.return_param)
        << " q=" << format_double(params.inout_param) << " L=" << params.walk_length
        << " n=" << params.walks_per_node << " seed=" << params.seed << "\n";
    for (std::uint32_t v = 0; v < walks.node_count(); ++v) {
        for (std::uint32_t w = 0; w < walks.walks_per_node(); ++w) {
            const auto walk = walks.walk(v, w);
            for (std::size_t i = 0; i < walk.size(); ++i) {
                if (i) out << ' ';
                out << walk[i];
            }
            out << "\n";
        }
    }
}

WalkSet read_walks(const std::filesystem::path& path, WalkParams* params_out) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("#params ", 0) != 0) {
        throw ParseError(path.string() + ": expected '#params ...' header line");
    }
    WalkParams params;
    {
        std::istringstream hs(line.substr(8));
        std::string token;
        while (hs >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) throw ParseError(path.string() + ": bad header token " + token);
            const std::string k = token.substr(0, eq);
            const std::string v = token.substr(eq + 1);
            const auto num = parse_double(v);
            if (!num) throw ParseError(path.string() + ": bad header value " + token);
            if (k == "p") params.return_param = *num;
            else if (k == "q") params.inout_param = *num;
            else if (k == "L") params.walk_length = static_cast<std::uint32_t>(*num);
            else if (k == "n") params.walks_per_node = static_cast<std::uint32_t>(*num);
            else if (k == "seed") params.seed = static_cast<std::uint64_t>(*num);
            else throw ParseError(path.string() + ": unknown header key " + k);
        }
    }
    params.validate();

    std::vector<std::vector<std::uint32_t>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::vector<std::uint32_t> ids;
        long long id = 0;
        while (ls >> id) {
            if (id < 0) throw ParseError(path.string() + ": negative node id in walk");
            ids.push_back(static_cast<std::uint32_t>(id));
        }
        if (ids.size() != params.walk_length + 1u) {
            throw ParseError(path.string() + ": walk length mismatch with header L");
        }
        rows.push_back(std::move(ids));
    }
    if (rows.empty() || rows.size() % params.walks_per_node != 0) {
        throw ParseError(path.string() + ": walk count is not a multiple of walks-per-node");
    }
    const auto n_nodes = static_cast<std::uint32_t>(rows.size() / params.walks_per_node);
    WalkSet walks(n_nodes, params.walks_per_node, params.walk_length);
    for (std::uint32_t v = 0; v < n_nodes; ++v) {
        for (std::uint32_t w = 0; w < params.walks_per_node; ++w) {
            const auto& src = rows[static_cast<std::size_t>(v) * params.walks_per_node + w];
            if (src[0] != v) {
                throw ParseError(path.string() + ": walk block for node " + std::to_string(v) +
                                 " starts at node " + std::to_string(src[0]));
            }
            std::copy(src.begin(), src.end(), walks.walk(v, w).begin());
        }
    }
    if (params_out) *params_out = params;
    return walks;
}

}  // namespace nightgrav
