#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "dtpo/env.hpp"
#include "dtpo/error.hpp"

namespace dtpo {

FrozenLake::FrozenLake(std::string name, std::vector<std::string> map,
                       int max_episode_steps)
    : spec_{std::move(name), 2, 4, max_episode_steps, {"row", "column"},
            {"left", "down", "right", "up"}},
      map_(std::move(map)) {
  if (map_.empty() || map_.front().empty()) {
    throw Error(ErrorCode::InvalidArgument, "frozen lake map is empty");
  }
  bool found_start = false;
  for (int r = 0; r < rows(); ++r) {
    if (static_cast<int>(map_[r].size()) != cols()) {
      throw Error(ErrorCode::InvalidArgument, "frozen lake map is not rectangular");
    }
    for (int c = 0; c < cols(); ++c) {
      if (map_[r][c] == 'S') {
        start_row_ = r;
        start_col_ = c;
        found_start = true;
      }
    }
  }
  if (!found_start) {
    throw Error(ErrorCode::InvalidArgument, "frozen lake map has no start tile");
  }
}

FrozenLake FrozenLake::four_by_four() {
  return FrozenLake("frozenlake4x4", {"SFFF", "FHFH", "FFFH", "HFFG"}, 100);
}

FrozenLake FrozenLake::eight_by_eight() {
  return FrozenLake("frozenlake8x8",
                    {"SFFFFFFF", "FFFFFFFF", "FFFHFFFF", "FFFFFHFF", "FFFHFFFF",
                     "FHHFFFHF", "FHFFHFHF", "FFFHFFFG"},
                    200);
}

std::pair<int, int> FrozenLake::move(int row, int col, int direction) const {
  switch (direction) {
    case kLeft: col = std::max(col - 1, 0); break;
    case kDown: row = std::min(row + 1, rows() - 1); break;
    case kRight: col = std::min(col + 1, cols() - 1); break;
    case kUp: row = std::max(row - 1, 0); break;
    default: break;
  }
  return {row, col};
}

Observation FrozenLake::reset_state(Rng& /*rng*/) {
  row_ = start_row_;
  col_ = start_col_;
  return Eigen::Vector2d(row_, col_);
}

Environment::Transition FrozenLake::advance(int action, Rng& rng) {
  // Intended direction or one of its two neighbours, never the opposite.
  const int direction = (action + uniform_int(rng, -1, 1) + 4) % 4;
  std::tie(row_, col_) = move(row_, col_, direction);
  const char t = tile(row_, col_);
  return {Eigen::Vector2d(row_, col_), t == 'G' ? 1.0 : 0.0, t == 'G' || t == 'H'};
}

Blackjack::Blackjack()
    : spec_{"blackjack",
            3,
            2,
            // Every hand ends after at most 11 decisions, so the cap never binds.
            kHandsPerEpisode * 12,
            {"player sum", "dealer card", "usable ace"},
            {"stick", "hit"}} {}

namespace {

int draw_card(Rng& rng) {
  // Infinite deck: ace=1, 2-9, and four ten-valued ranks.
  return std::min(uniform_int(rng, 1, 13), 10);
}

}  // namespace

bool Blackjack::usable_ace(const std::vector<int>& cards) {
  const int sum = std::accumulate(cards.begin(), cards.end(), 0);
  return std::find(cards.begin(), cards.end(), 1) != cards.end() && sum + 10 <= 21;
}

int Blackjack::hand_value(const std::vector<int>& cards) {
  const int sum = std::accumulate(cards.begin(), cards.end(), 0);
  return usable_ace(cards) ? sum + 10 : sum;
}

void Blackjack::deal(Rng& rng) {
  player_ = {draw_card(rng), draw_card(rng)};
  dealer_ = {draw_card(rng), draw_card(rng)};
}

Observation Blackjack::observe() const {
  return Eigen::Vector3d(hand_value(player_), dealer_.front(),
                         usable_ace(player_) ? 1.0 : 0.0);
}

Observation Blackjack::reset_state(Rng& rng) {
  hands_played_ = 0;
  deal(rng);
  return observe();
}

Environment::Transition Blackjack::advance(int action, Rng& rng) {
  double reward = 0.0;
  bool hand_over = false;
  if (action == 1) {
    player_.push_back(draw_card(rng));
    if (hand_value(player_) > 21) {
      reward = -1.0;
      hand_over = true;
    }
  } else {
    while (hand_value(dealer_) < 17) dealer_.push_back(draw_card(rng));
    const int player = hand_value(player_);
    const int dealer = hand_value(dealer_);
    if (dealer > 21 || player > dealer) {
      reward = 1.0;
    } else if (player < dealer) {
      reward = -1.0;
    }
    hand_over = true;
  }
  if (!hand_over) return {observe(), reward, false};

  ++hands_played_;
  if (hands_played_ >= kHandsPerEpisode) return {observe(), reward, true};
  deal(rng);
  return {observe(), reward, false};
}

Xor::Xor() : spec_{"xor", 2, 2, 1000, {"x", "y"}, {"zero", "one"}} {}

void Xor::sample(Rng& rng) {
  x_ = (uniform_int(rng, 0, kGrid - 1) + 0.5) / kGrid;
  y_ = (uniform_int(rng, 0, kGrid - 1) + 0.5) / kGrid;
}

Observation Xor::reset_state(Rng& rng) {
  sample(rng);
  return Eigen::Vector2d(x_, y_);
}

Environment::Transition Xor::advance(int action, Rng& rng) {
  const double reward = action == correct_action(x_, y_) ? 1.0 : 0.0;
  sample(rng);
  return {Eigen::Vector2d(x_, y_), reward, false};
}

}  // namespace dtpo
