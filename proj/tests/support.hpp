#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "facilmut/grammar.hpp"

namespace testsupport {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 salt{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("facilmut-" + tag + "-" + std::to_string(salt()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Grammar as plain index lists: productions[n][p] is a symbol sequence where
/// -1 stands for a terminal and k >= 0 references non-terminal k.
struct RawGrammar {
    std::vector<std::vector<std::vector<int>>> productions;

    std::string text() const {
        std::string out;
        for (std::size_t n = 0; n < productions.size(); ++n) {
            out += "<n" + std::to_string(n) + "> ::=";
            for (std::size_t p = 0; p < productions[n].size(); ++p) {
                if (p > 0) out += " |";
                int t = 0;
                for (int s : productions[n][p]) {
                    out += s < 0 ? " t" + std::to_string(t++) : " <n" + std::to_string(s) + ">";
                }
            }
            out += "\n";
        }
        return out;
    }

    // Bounded-height derivability, level by level: at level d a non-terminal
    // is derivable if some production only references symbols derivable at
    // level d-1. Returns -1 when nothing is found up to `limit`.
    int min_depth(std::size_t nt, int limit = 64) const {
        std::vector<bool> prev(productions.size(), false);
        for (int d = 1; d <= limit; ++d) {
            std::vector<bool> cur(productions.size(), false);
            for (std::size_t i = 0; i < productions.size(); ++i) {
                for (const auto& p : productions[i]) {
                    bool ok = true;
                    for (int s : p) {
                        if (s >= 0 && !prev[static_cast<std::size_t>(s)]) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok) {
                        cur[i] = true;
                        break;
                    }
                }
            }
            if (cur[nt]) return d;
            prev = std::move(cur);
        }
        return -1;
    }

    int production_min_depth(std::size_t nt, std::size_t p) const {
        int depth = 1;
        for (int s : productions[nt][p]) {
            if (s >= 0) {
                const int sub = min_depth(static_cast<std::size_t>(s));
                if (sub < 0) return -1;
                depth = std::max(depth, 1 + sub);
            }
        }
        return depth;
    }

    bool reaches_itself(std::size_t nt) const {
        std::set<int> seen;
        std::vector<int> stack;
        auto push_refs = [&](std::size_t from) {
            for (const auto& p : productions[from])
                for (int s : p)
                    if (s >= 0) stack.push_back(s);
        };
        push_refs(nt);
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            if (cur == static_cast<int>(nt)) return true;
            if (seen.insert(cur).second) push_refs(static_cast<std::size_t>(cur));
        }
        return false;
    }
};

/// Up to 3 productions of up to 3 symbols per non-terminal; a third of the
/// symbols are terminals, so some grammars are unproductive.
inline RawGrammar random_raw_grammar(std::mt19937_64& rng, int count) {
    std::uniform_int_distribution<int> nprod(1, 3), nsym(1, 3), pick(0, count - 1), coin(0, 2);
    RawGrammar g;
    g.productions.resize(static_cast<std::size_t>(count));
    for (auto& prods : g.productions) {
        prods.resize(static_cast<std::size_t>(nprod(rng)));
        for (auto& p : prods) {
            const int syms = nsym(rng);
            for (int s = 0; s < syms; ++s) {
                p.push_back(coin(rng) == 0 ? -1 : pick(rng));
            }
        }
    }
    return g;
}

}  // namespace testsupport
