#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "argos/core_types.hpp"
#include "argos/kpm_codec.hpp"

namespace argos {

// O-CU side of the link: windows each UE's measurements into wall-clock
// seconds and emits one RIC Indication per UE per completed second.
class E2Node {
 public:
  explicit E2Node(std::uint32_t node_id = 1);

  kpm::SetupRequest setup_request() const;
  void on_setup_response(const kpm::SetupResponse& response);
  bool setup_complete() const;

  // Accepts iff setup is complete, the period is 1000 ms and the id is unused.
  kpm::SubscriptionResponse handle_subscription(const kpm::SubscriptionRequest& request);
  std::optional<std::uint32_t> active_subscription() const;

  // Throws std::logic_error without an active subscription.
  std::vector<kpm::RicIndication> on_report(const MeasurementReport& report);
  std::vector<kpm::RicIndication> flush_all();

  std::uint64_t late_arrivals() const;
  std::uint64_t emitted_measurements() const;

 private:
  struct UeAccumulator {
    std::int64_t current_second = 0;
    bool open = false;
    std::optional<std::int64_t> last_flushed;
    std::vector<CellMeasurement> pending;
  };

  kpm::RicIndication make_indication(const std::string& ue_id, std::int64_t second,
                                     const std::vector<CellMeasurement>& measurements);
  void close_second(const std::string& ue_id, UeAccumulator& acc, std::vector<kpm::RicIndication>& out);

  mutable std::mutex mutex_;
  std::uint32_t node_id_;
  bool setup_complete_ = false;
  std::set<std::uint32_t> subscriptions_;
  std::optional<std::uint32_t> active_subscription_;
  std::map<std::string, UeAccumulator> accumulators_;
  std::uint64_t late_arrivals_ = 0;
  std::uint64_t emitted_measurements_ = 0;
};

}  // namespace argos
