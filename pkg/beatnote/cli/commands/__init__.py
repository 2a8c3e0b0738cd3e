# Command modules for the beatnote CLI.
