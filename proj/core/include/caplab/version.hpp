#pragma once

#define CAPLAB_VERSION "0.1.0"
