#pragma once

// Reference device, task and radio constants used as configuration defaults.

#include "trustpath/domain.hpp"

namespace trustpath::presets {

inline constexpr double kIphonePricePerS = 0.02;
inline constexpr double kPixelPricePerS = 0.01;
inline constexpr double kLambdaPricePerS = 0.002;

inline constexpr double kIphoneCpuHz = 3.46e9;
inline constexpr double kPixelCpuHz = 2.91e9;
inline constexpr double kLambdaCpuHz = 4e9;

inline constexpr double kTerminalStorageBytes = 128e9;
inline constexpr double kLambdaStorageBytes = 3.84e12;

inline constexpr double kTerminalTxPowerW = 0.1;
inline constexpr double kBandwidthHz = 5e6;
inline constexpr double kNoiseDbm = -80.0;

inline constexpr double kAlpha1 = 0.6;
inline constexpr double kAlpha2 = 0.4;

inline constexpr double kFaceRecognitionDensity = 2339.0;
inline constexpr double kVirusScanningDensity = 32946.0;
inline constexpr double kDefaultTaskMegabytes = 200.0;

RadioEnv default_radio();
Task face_recognition(DeviceId owner);
Task virus_scanning(DeviceId owner);
/// Looks up a named preset ("face_recognition" or "virus_scanning").
Task named_task(std::string_view name, DeviceId owner);

}  // namespace trustpath::presets
