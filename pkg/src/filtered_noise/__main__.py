from filtered_noise.cli import main

main()
