'''Command-line harness of the simulator'''
