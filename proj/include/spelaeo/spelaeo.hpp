#pragma once

// Umbrella include for the whole library.

#include <spelaeo/config.hpp>
#include <spelaeo/depth_fusion.hpp>
#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>
#include <spelaeo/io.hpp>
#include <spelaeo/log.hpp>
#include <spelaeo/random.hpp>
#include <spelaeo/recon_prep.hpp>
#include <spelaeo/skeleton.hpp>
#include <spelaeo/survey.hpp>
#include <spelaeo/synth.hpp>
#include <spelaeo/target_align.hpp>
#include <spelaeo/version.hpp>
