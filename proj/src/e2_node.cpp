#include "argos/e2_node.hpp"

#include <stdexcept>

namespace argos {

E2Node::E2Node(std::uint32_t node_id) : node_id_(node_id) {}

kpm::SetupRequest E2Node::setup_request() const {
  using kpm::MetricTag;
  return {node_id_,
          {MetricTag::Rsrp, MetricTag::Rsrq, MetricTag::Sinr, MetricTag::IntraFrequency, MetricTag::InterFrequency,
           MetricTag::InterRat}};
}

void E2Node::on_setup_response(const kpm::SetupResponse& response) {
  std::lock_guard lock(mutex_);
  setup_complete_ = response.accepted;
}

bool E2Node::setup_complete() const {
  std::lock_guard lock(mutex_);
  return setup_complete_;
}

kpm::SubscriptionResponse E2Node::handle_subscription(const kpm::SubscriptionRequest& request) {
  std::lock_guard lock(mutex_);
  kpm::SubscriptionResponse response{request.subscription_id, false};
  if (!setup_complete_ || request.report_period_ms != 1000) return response;
  if (!subscriptions_.insert(request.subscription_id).second) return response;
  if (!active_subscription_) active_subscription_ = request.subscription_id;
  response.accepted = true;
  return response;
}

std::optional<std::uint32_t> E2Node::active_subscription() const {
  std::lock_guard lock(mutex_);
  return active_subscription_;
}

kpm::RicIndication E2Node::make_indication(const std::string& ue_id, std::int64_t second,
                                           const std::vector<CellMeasurement>& measurements) {
  kpm::RicIndication ind;
  ind.subscription_id = *active_subscription_;
  ind.ue_id = ue_id;
  ind.second_index = static_cast<std::uint32_t>(second);
  ind.measurements.reserve(measurements.size());
  for (const auto& m : measurements) ind.measurements.push_back(kpm::to_wire(m));
  emitted_measurements_ += measurements.size();
  return ind;
}

void E2Node::close_second(const std::string& ue_id, UeAccumulator& acc, std::vector<kpm::RicIndication>& out) {
  out.push_back(make_indication(ue_id, acc.current_second, acc.pending));
  acc.last_flushed = acc.current_second;
  acc.pending.clear();
  acc.open = false;
}

std::vector<kpm::RicIndication> E2Node::on_report(const MeasurementReport& report) {
  std::lock_guard lock(mutex_);
  if (!active_subscription_) throw std::logic_error("E2Node::on_report: no active subscription");

  std::vector<kpm::RicIndication> out;
  UeAccumulator& acc = accumulators_[report.ue_id];
  for (const auto& m : report.neighbors) {
    const std::int64_t second = m.second();
    if (second < 0 || (acc.last_flushed && second <= *acc.last_flushed) || (acc.open && second < acc.current_second)) {
      ++late_arrivals_;
      continue;
    }
    if (acc.open && second > acc.current_second) close_second(report.ue_id, acc, out);
    if (!acc.open) {
      // Keep the per-second cadence across gaps with explicit empty indications.
      if (acc.last_flushed) {
        for (std::int64_t gap = *acc.last_flushed + 1; gap < second; ++gap) {
          out.push_back(make_indication(report.ue_id, gap, {}));
          acc.last_flushed = gap;
        }
      }
      acc.current_second = second;
      acc.open = true;
    }
    acc.pending.push_back(m);
  }
  return out;
}

std::vector<kpm::RicIndication> E2Node::flush_all() {
  std::lock_guard lock(mutex_);
  std::vector<kpm::RicIndication> out;
  for (auto& [ue_id, acc] : accumulators_) {
    if (acc.open) close_second(ue_id, acc, out);
  }
  return out;
}

std::uint64_t E2Node::late_arrivals() const {
  std::lock_guard lock(mutex_);
  return late_arrivals_;
}

std::uint64_t E2Node::emitted_measurements() const {
  std::lock_guard lock(mutex_);
  return emitted_measurements_;
}

}  // namespace argos
