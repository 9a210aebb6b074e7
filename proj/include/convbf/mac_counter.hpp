#ifndef CONVBF_MAC_COUNTER_HPP
#define CONVBF_MAC_COUNTER_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace convbf {

/// Operation tallies. A complex multiply-add counts as one MAC.
struct MacTally {
  std::uint64_t complex_macs = 0;
  std::uint64_t real_macs = 0;
  std::uint64_t divisions = 0;

  std::uint64_t total() const { return complex_macs + real_macs; }
  MacTally& operator+=(const MacTally& other) {
    complex_macs += other.complex_macs;
    real_macs += other.real_macs;
    divisions += other.divisions;
    return *this;
  }
  friend bool operator==(const MacTally&, const MacTally&) = default;
};

/// Counts operations into the root tally and every open scope. Scopes nest;
/// a parent always includes everything recorded by its children. Not
/// thread-safe: use one counter per measuring thread.
class MacCounter {
 public:
  class Scope {
   public:
    Scope(MacCounter& counter, std::string label) : counter_(counter) {
      counter_.open_.push_back(std::move(label));
      counter_.scopes_[counter_.path()];
    }
    ~Scope() { counter_.open_.pop_back(); }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    MacCounter& counter_;
  };

  void complex_mac(std::uint64_t n = 1) { record({n, 0, 0}); }
  void real_mac(std::uint64_t n = 1) { record({0, n, 0}); }
  void division(std::uint64_t n = 1) { record({0, 0, n}); }

  const MacTally& total() const { return total_; }
  /// Tally of a scope addressed by its slash-joined path, e.g. "update/gain".
  MacTally scope(const std::string& path) const {
    auto it = scopes_.find(path);
    return it == scopes_.end() ? MacTally{} : it->second;
  }
  const std::map<std::string, MacTally>& scopes() const { return scopes_; }
  void reset() {
    total_ = {};
    scopes_.clear();
  }

 private:
  void record(const MacTally& t) {
    total_ += t;
    std::string prefix;
    for (const std::string& label : open_) {
      prefix = prefix.empty() ? label : prefix + "/" + label;
      scopes_[prefix] += t;
    }
  }
  std::string path() const {
    std::string p;
    for (const std::string& label : open_) p = p.empty() ? label : p + "/" + label;
    return p;
  }

  MacTally total_;
  std::vector<std::string> open_;
  std::map<std::string, MacTally> scopes_;
};

}  // namespace convbf

#endif  // CONVBF_MAC_COUNTER_HPP
