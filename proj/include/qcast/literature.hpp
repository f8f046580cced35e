#pragma once

namespace qcast::literature {

// Published reference results used only as comparison constants in report
// footers. These numbers come from the respective studies' papers and are
// never recomputed or retrained here.

// QLSTM study, Bangkok PM2.5 forecasting.
inline constexpr double kQlstmMae = 11.24;   // ug/m^3
inline constexpr double kQlstmRmse = 15.06;  // ug/m^3
inline constexpr int kQlstmEpochs = 100;
inline constexpr double kClassicalLstmMae = 21.50;  // same study's baseline

// LSTM-QNN study, hourly wind speed forecasting at 100 m.
inline constexpr double kLstmQnnRmse = 3.92;  // km/h
inline constexpr double kLstmQnnMae = 2.87;   // km/h
inline constexpr double kLstmQnnTrainMinutes = 65.3;

// Reference QPU measurements of the depth-2 Rx circuit (1,000 shots per
// case); hardware artifact, reported for comparison only.
inline constexpr double kQpuP1Low = 0.1590;   // phi=0.5, theta=0.3
inline constexpr double kQpuP1Med = 0.6850;   // phi=1.2, theta=0.8
inline constexpr double kQpuP1High = 0.9620;  // phi=2.0, theta=1.5
inline constexpr double kQpuP1Average = 0.6020;

}  // namespace qcast::literature
