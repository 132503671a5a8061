#pragma once

// Flat key = value [unit] reader shared by the experiment and condensate configs.

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fpt {

// G / G_crit grid of the variance sweeps: 1 - G/G_crit geometric from 0.2 to 0.001.
std::vector<double> default_sweep_ratios();

namespace detail {

struct Entry {
    std::string value;
    std::string unit;
    int line = 0;
};

std::string_view trim(std::string_view s);
std::string format_number(double v);
double parse_number(std::string_view s, const std::string& key);
std::map<std::string, Entry> tokenize(std::string_view text);

// Typed access that records which keys were consumed.
class Reader {
public:
    explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    double number(const std::string& key, double fallback, std::string_view unit);
    long long integer(const std::string& key, long long fallback);
    std::uint64_t u64(const std::string& key, std::uint64_t fallback);
    bool boolean(const std::string& key, bool fallback);
    std::string word(const std::string& key, std::string fallback, std::initializer_list<std::string_view> allowed);
    std::vector<double> list(const std::string& key, std::vector<double> fallback, std::string_view unit);
    std::optional<Entry> raw(const std::string& key);

    // ConfigError for the first key nobody asked for.
    void finish(const std::function<std::string(const std::string&)>& explain) const;

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

}  // namespace detail
}  // namespace fpt
